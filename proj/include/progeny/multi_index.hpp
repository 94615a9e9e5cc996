#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace progeny {

/// Dense graded layout of all exponent vectors n in N_0^m with |n| <= N.
///
/// Monomials are ordered by total degree, then lexicographically ascending in
/// (n_1, ..., n_m); every degree occupies one contiguous block. The layout is
/// immutable and shared between all series of the same (arity, order).
class GradedIndex {
 public:
  /// Upper bound on the number of stored coefficients.
  static constexpr std::size_t kMaxSize = 50'000'000;

  GradedIndex(int arity, int order);

  /// Cached, thread-safe lookup.
  static std::shared_ptr<const GradedIndex> get(int arity, int order);

  int arity() const { return arity_; }
  int order() const { return order_; }
  std::size_t size() const { return offsets_.back(); }

  /// First index of the degree-d block; offset(order + 1) == size().
  std::size_t offset(int degree) const { return offsets_[static_cast<std::size_t>(degree)]; }
  std::size_t block_size(int degree) const { return offset(degree + 1) - offset(degree); }

  std::span<const int> exponent(std::size_t idx) const {
    return {exponents_.data() + idx * static_cast<std::size_t>(arity_), static_cast<std::size_t>(arity_)};
  }

  /// Index of n. Throws DomainError when n has the wrong arity, a negative entry
  /// or total degree above the order.
  std::size_t index(std::span<const int> n) const;

  /// Position of n inside its degree block.
  std::size_t rank_in_block(const int* n, int degree) const;
  /// Position of a + b inside the block of degree |a| + |b|.
  std::size_t rank_of_sum(const int* a, const int* b, int degree) const;

  /// C(n, k) for n <= order + arity, k <= arity.
  std::size_t binom(int n, int k) const;

 private:
  int arity_;
  int order_;
  std::vector<std::size_t> binom_;
  std::vector<std::size_t> offsets_;
  std::vector<int> exponents_;
};

}  // namespace progeny
