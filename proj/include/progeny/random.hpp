#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace progeny {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the i-th output of a stream is mix64(key + i * golden),
/// which is exactly SplitMix64 with the key as its seed. Streams are split by
/// deriving keys from (seed, stream index), so record r of a run always sees the
/// same numbers no matter how records are distributed over workers.
///
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  /// Independent stream `index` of the run seeded with `seed`.
  static CounterRng stream(std::uint64_t seed, std::uint64_t index) {
    return CounterRng(mix64(seed ^ mix64(index + kGolden)));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Walker/Vose alias table over {0, ..., n-1}.
class AliasTable {
 public:
  AliasTable() = default;
  /// Weights need not be normalized; they must be nonnegative with a positive sum.
  explicit AliasTable(const std::vector<double>& weights);

  std::size_t size() const { return prob_.size(); }
  std::size_t sample(CounterRng& rng) const;

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

/// Poisson(mean) draw: sequential inversion below 10, PTRS rejection (Hoermann 1993) above.
std::uint64_t sample_poisson(CounterRng& rng, double mean);

}  // namespace progeny
