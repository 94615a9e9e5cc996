#include "progeny/multi_index.hpp"

#include <map>
#include <mutex>
#include <string>

#include "progeny/errors.hpp"

namespace progeny {

namespace {

// Appends all vectors of the given degree in ascending lexicographic order.
void enumerate_block(int arity, int degree, std::vector<int>& current, int pos, int remaining,
                     std::vector<int>& out) {
  if (pos == arity - 1) {
    current[static_cast<std::size_t>(pos)] = remaining;
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int v = 0; v <= remaining; ++v) {
    current[static_cast<std::size_t>(pos)] = v;
    enumerate_block(arity, degree, current, pos + 1, remaining - v, out);
  }
}

}  // namespace

GradedIndex::GradedIndex(int arity, int order) : arity_(arity), order_(order) {
  if (arity < 1) throw DomainError("series arity must be positive");
  if (order < 0) throw DomainError("series order must be nonnegative");
  const int rows = order + arity + 1;
  const int cols = arity + 1;
  binom_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0);
  for (int n = 0; n < rows; ++n) {
    binom_[static_cast<std::size_t>(n * cols)] = 1;
    for (int k = 1; k <= std::min(n, arity); ++k) {
      const std::size_t above = binom_[static_cast<std::size_t>((n - 1) * cols + k)];
      const std::size_t diag = binom_[static_cast<std::size_t>((n - 1) * cols + k - 1)];
      binom_[static_cast<std::size_t>(n * cols + k)] = above + diag;
    }
  }
  const std::size_t total = binom(order + arity, arity);
  if (total > kMaxSize) {
    throw DomainError("series with arity " + std::to_string(arity) + " and order " +
                      std::to_string(order) + " needs " + std::to_string(total) +
                      " coefficients, above the dense storage limit");
  }
  offsets_.resize(static_cast<std::size_t>(order) + 2);
  offsets_[0] = 0;
  for (int d = 0; d <= order; ++d) {
    offsets_[static_cast<std::size_t>(d) + 1] =
        offsets_[static_cast<std::size_t>(d)] + binom(d + arity - 1, arity - 1);
  }
  exponents_.reserve(total * static_cast<std::size_t>(arity));
  std::vector<int> current(static_cast<std::size_t>(arity), 0);
  for (int d = 0; d <= order; ++d) enumerate_block(arity, d, current, 0, d, exponents_);
}

std::shared_ptr<const GradedIndex> GradedIndex::get(int arity, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const GradedIndex>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{arity, order}];
  if (!slot) slot = std::make_shared<const GradedIndex>(arity, order);
  return slot;
}

std::size_t GradedIndex::binom(int n, int k) const {
  if (k < 0 || n < k) return 0;
  return binom_[static_cast<std::size_t>(n * (arity_ + 1) + k)];
}

std::size_t GradedIndex::rank_in_block(const int* n, int degree) const {
  std::size_t r = 0;
  int rem = degree;
  for (int i = 0; i < arity_ - 1; ++i) {
    const int vars = arity_ - 1 - i;
    r += binom(rem + vars, vars) - binom(rem - n[i] + vars, vars);
    rem -= n[i];
  }
  return r;
}

std::size_t GradedIndex::rank_of_sum(const int* a, const int* b, int degree) const {
  if (arity_ == 1) return 0;
  if (arity_ == 2) return static_cast<std::size_t>(a[0] + b[0]);
  std::size_t r = 0;
  int rem = degree;
  for (int i = 0; i < arity_ - 1; ++i) {
    const int vars = arity_ - 1 - i;
    const int ni = a[i] + b[i];
    r += binom(rem + vars, vars) - binom(rem - ni + vars, vars);
    rem -= ni;
  }
  return r;
}

std::size_t GradedIndex::index(std::span<const int> n) const {
  if (static_cast<int>(n.size()) != arity_) throw DomainError("exponent vector has the wrong arity");
  int degree = 0;
  for (int v : n) {
    if (v < 0) throw DomainError("exponent vector has a negative entry");
    degree += v;
  }
  if (degree > order_) throw DomainError("exponent degree exceeds the truncation order");
  return offset(degree) + rank_in_block(n.data(), degree);
}

}  // namespace progeny
