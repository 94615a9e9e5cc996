#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "progeny/errors.hpp"
#include "progeny/multi_index.hpp"

namespace progeny {

/// Multivariate formal power series in m variables truncated at total degree N.
///
/// Coefficients are stored densely in the graded layout of GradedIndex, so every
/// homogeneous component is a contiguous block. Entries of total degree above N
/// are implicitly dropped by every operation.
template <typename Scalar = double>
class Series {
 public:
  using scalar_type = Scalar;

  Series() = default;
  Series(int arity, int order) : Series(GradedIndex::get(arity, order)) {}
  explicit Series(std::shared_ptr<const GradedIndex> layout)
      : layout_(std::move(layout)), coeffs_(layout_->size(), Scalar(0)) {}

  static Series constant(int arity, int order, Scalar c) {
    Series s(arity, order);
    s.coeffs_[0] = c;
    return s;
  }

  /// The monomial s_j (0-based j).
  static Series variable(int arity, int order, int j) {
    Series s(arity, order);
    if (order >= 1) {
      std::vector<int> e(static_cast<std::size_t>(arity), 0);
      e[static_cast<std::size_t>(j)] = 1;
      s.coeffs_[s.layout_->index(e)] = Scalar(1);
    }
    return s;
  }

  int arity() const { return layout_->arity(); }
  int order() const { return layout_->order(); }
  std::size_t size() const { return coeffs_.size(); }
  const GradedIndex& layout() const { return *layout_; }
  const std::shared_ptr<const GradedIndex>& layout_ptr() const { return layout_; }

  bool same_shape(const Series& other) const {
    return arity() == other.arity() && order() == other.order();
  }

  Scalar& operator[](std::size_t idx) { return coeffs_[idx]; }
  Scalar operator[](std::size_t idx) const { return coeffs_[idx]; }

  /// [s^n] of the series; zero when |n| exceeds the order.
  Scalar coeff(std::span<const int> n) const {
    int degree = 0;
    for (int v : n) {
      if (v < 0) return Scalar(0);
      degree += v;
    }
    if (degree > order()) return Scalar(0);
    return coeffs_[layout_->index(n)];
  }
  Scalar coeff(const Eigen::VectorXi& n) const {
    return coeff(std::span<const int>(n.data(), static_cast<std::size_t>(n.size())));
  }
  void set(const Eigen::VectorXi& n, Scalar value) {
    coeffs_[layout_->index(std::span<const int>(n.data(), static_cast<std::size_t>(n.size())))] = value;
  }

  Scalar constant_term() const { return coeffs_[0]; }

  std::span<Scalar> block(int degree) {
    return {coeffs_.data() + layout_->offset(degree), layout_->block_size(degree)};
  }
  std::span<const Scalar> block(int degree) const {
    return {coeffs_.data() + layout_->offset(degree), layout_->block_size(degree)};
  }

  const std::vector<Scalar>& coefficients() const { return coeffs_; }
  std::vector<Scalar>& coefficients() { return coeffs_; }

  Series& operator+=(const Series& o) {
    check_shape(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  Series& operator-=(const Series& o) {
    check_shape(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  Series& operator*=(Scalar c) {
    for (auto& v : coeffs_) v *= c;
    return *this;
  }
  Series& operator+=(Scalar c) {
    coeffs_[0] += c;
    return *this;
  }

  void check_shape(const Series& o) const {
    if (!same_shape(o)) throw DomainError("series arity/order mismatch");
  }

 private:
  std::shared_ptr<const GradedIndex> layout_;
  std::vector<Scalar> coeffs_;
};

using TruncatedSeries = Series<double>;

/// out[degree ka + kb] += factor * a[degree ka] * b[degree kb]
/// (homogeneous block product; out may alias a or b only on other blocks).
template <typename Scalar>
void accumulate_block_product(const Series<Scalar>& a, int ka, const Series<Scalar>& b, int kb,
                              Series<Scalar>& out, Scalar factor = Scalar(1)) {
  const int d = ka + kb;
  if (d > out.order()) return;
  const GradedIndex& lay = out.layout();
  const std::size_t ao = lay.offset(ka);
  const std::size_t bo = lay.offset(kb);
  const std::size_t oo = lay.offset(d);
  const std::size_t na = lay.block_size(ka);
  const std::size_t nb = lay.block_size(kb);
  const int m = lay.arity();
  if (m == 1) {
    Scalar s = a[ao] * b[bo];
    out[oo] += factor * s;
    return;
  }
  if (m == 2) {
    // Inside a degree block of arity 2 the rank equals the first exponent.
    Scalar* dst = &out[oo];
    for (std::size_t i = 0; i < na; ++i) {
      const Scalar av = factor * a[ao + i];
      if (av == Scalar(0)) continue;
      for (std::size_t j = 0; j < nb; ++j) dst[i + j] += av * b[bo + j];
    }
    return;
  }
  for (std::size_t i = 0; i < na; ++i) {
    const Scalar av = factor * a[ao + i];
    if (av == Scalar(0)) continue;
    const int* ea = lay.exponent(ao + i).data();
    for (std::size_t j = 0; j < nb; ++j) {
      out[oo + lay.rank_of_sum(ea, lay.exponent(bo + j).data(), d)] += av * b[bo + j];
    }
  }
}

template <typename Scalar>
Series<Scalar> add(const Series<Scalar>& a, const Series<Scalar>& b) {
  Series<Scalar> r = a;
  r += b;
  return r;
}

template <typename Scalar>
Series<Scalar> scale(const Series<Scalar>& a, Scalar c) {
  Series<Scalar> r = a;
  r *= c;
  return r;
}

/// Truncated product.
template <typename Scalar>
Series<Scalar> mul(const Series<Scalar>& a, const Series<Scalar>& b) {
  a.check_shape(b);
  Series<Scalar> r(a.layout_ptr());
  const int n = a.order();
  for (int ka = 0; ka <= n; ++ka) {
    for (int kb = 0; kb + ka <= n; ++kb) accumulate_block_product(a, ka, b, kb, r);
  }
  return r;
}

template <typename Scalar>
Series<Scalar> operator+(Series<Scalar> a, const Series<Scalar>& b) {
  a += b;
  return a;
}
template <typename Scalar>
Series<Scalar> operator-(Series<Scalar> a, const Series<Scalar>& b) {
  a -= b;
  return a;
}
template <typename Scalar>
Series<Scalar> operator*(const Series<Scalar>& a, const Series<Scalar>& b) {
  return mul(a, b);
}
template <typename Scalar>
Series<Scalar> operator*(Series<Scalar> a, Scalar c) {
  a *= c;
  return a;
}
template <typename Scalar>
Series<Scalar> operator*(Scalar c, Series<Scalar> a) {
  a *= c;
  return a;
}

/// Partial derivative in s_j (0-based). The top-degree block of the result is zero.
template <typename Scalar>
Series<Scalar> diff(const Series<Scalar>& a, int j) {
  Series<Scalar> r(a.layout_ptr());
  const GradedIndex& lay = a.layout();
  std::vector<int> e(static_cast<std::size_t>(a.arity()));
  for (std::size_t idx = lay.offset(1); idx < lay.size(); ++idx) {
    const auto ex = lay.exponent(idx);
    const int p = ex[static_cast<std::size_t>(j)];
    if (p == 0) continue;
    std::copy(ex.begin(), ex.end(), e.begin());
    --e[static_cast<std::size_t>(j)];
    r[lay.index(e)] = static_cast<Scalar>(p) * a[idx];
  }
  return r;
}

/// Multiplication by s_j (0-based); the top-degree block of a is dropped.
template <typename Scalar>
Series<Scalar> shift(const Series<Scalar>& a, int j) {
  Series<Scalar> r(a.layout_ptr());
  const GradedIndex& lay = a.layout();
  std::vector<int> e(static_cast<std::size_t>(a.arity()));
  const int top = a.order();
  for (std::size_t idx = 0; idx < lay.offset(top); ++idx) {
    const auto ex = lay.exponent(idx);
    std::copy(ex.begin(), ex.end(), e.begin());
    ++e[static_cast<std::size_t>(j)];
    r[lay.index(e)] = a[idx];
  }
  return r;
}

/// Multiplicative inverse; requires a nonzero constant term.
template <typename Scalar>
Series<Scalar> inv(const Series<Scalar>& a) {
  const Scalar a0 = a.constant_term();
  if (a0 == Scalar(0)) throw DomainError("inv: series has zero constant term");
  Series<Scalar> r(a.layout_ptr());
  r[0] = Scalar(1) / a0;
  const Scalar f = Scalar(-1) / a0;
  for (int d = 1; d <= a.order(); ++d) {
    for (int k = 1; k <= d; ++k) accumulate_block_product(a, k, r, d - k, r, f);
  }
  return r;
}

/// Formal exponential via the Euler-operator recurrence d * E_d = sum_k k * a_k * E_{d-k}.
template <typename Scalar>
Series<Scalar> exp_series(const Series<Scalar>& a) {
  using std::exp;
  using std::isfinite;
  if (!isfinite(a.constant_term())) throw DomainError("exp_series: constant term is not finite");
  Series<Scalar> r(a.layout_ptr());
  r[0] = exp(a.constant_term());
  for (int d = 1; d <= a.order(); ++d) {
    for (int k = 1; k <= d; ++k) {
      accumulate_block_product(a, k, r, d - k, r, static_cast<Scalar>(k) / static_cast<Scalar>(d));
    }
  }
  return r;
}

/// a^e by repeated squaring.
template <typename Scalar>
Series<Scalar> pow(const Series<Scalar>& a, int e) {
  if (e < 0) throw DomainError("pow: negative exponent");
  Series<Scalar> result = Series<Scalar>::constant(a.arity(), a.order(), Scalar(1));
  Series<Scalar> base = a;
  while (e > 0) {
    if (e & 1) result = mul(result, base);
    e >>= 1;
    if (e > 0) base = mul(base, base);
  }
  return result;
}

}  // namespace progeny
