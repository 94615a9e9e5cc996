#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "oracles.hpp"
#include "progeny/errors.hpp"
#include "progeny/multi_index.hpp"
#include "progeny/progeny.hpp"
#include "progeny/series.hpp"

using namespace progeny;

namespace {

TruncatedSeries poly(int arity, int order, std::map<std::vector<int>, double> terms) {
  TruncatedSeries s(arity, order);
  for (const auto& [e, c] : terms) s.set(Eigen::Map<const Eigen::VectorXi>(e.data(), arity), c);
  return s;
}

double at(const TruncatedSeries& s, std::vector<int> e) {
  return s.coeff(std::span<const int>(e.data(), e.size()));
}

TruncatedSeries random_series(std::mt19937_64& rng, int arity, int order) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TruncatedSeries s(arity, order);
  for (auto& c : s.coefficients()) c = u(rng);
  return s;
}

// Schoolbook product over exponent maps, independent of the graded layout.
TruncatedSeries naive_mul(const TruncatedSeries& a, const TruncatedSeries& b) {
  const GradedIndex& lay = a.layout();
  const int m = a.arity();
  TruncatedSeries out(m, a.order());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const auto ei = lay.exponent(i);
      const auto ej = lay.exponent(j);
      std::vector<int> e(static_cast<std::size_t>(m));
      int total = 0;
      for (int k = 0; k < m; ++k) total += (e[static_cast<std::size_t>(k)] = ei[static_cast<std::size_t>(k)] + ej[static_cast<std::size_t>(k)]);
      if (total > a.order()) continue;
      const std::size_t idx = lay.index(std::span<const int>(e.data(), e.size()));
      out.coefficients()[idx] += a[i] * b[j];
    }
  }
  return out;
}

double max_diff(const TruncatedSeries& a, const TruncatedSeries& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("graded layout") {
  for (int m = 1; m <= 4; ++m) {
    for (int n = 0; n <= 9; ++n) {
      const GradedIndex lay(m, n);
      // C(n + m, m)
      double expect = 1.0;
      for (int k = 1; k <= m; ++k) expect = expect * (n + k) / k;
      CHECK(lay.size() == static_cast<std::size_t>(std::lround(expect)));
      for (std::size_t idx = 0; idx < lay.size(); ++idx) {
        const auto e = lay.exponent(idx);
        CHECK(lay.index(e) == idx);
      }
    }
  }
  const GradedIndex lay(2, 3);
  // Degree blocks are contiguous and lexicographically ascending.
  CHECK(lay.offset(2) == 3);
  const auto first = lay.exponent(lay.offset(2));
  CHECK(first[0] == 0);
  CHECK(first[1] == 2);
  CHECK(GradedIndex::get(2, 3).get() == GradedIndex::get(2, 3).get());
}

TEST_CASE("polynomial arithmetic examples") {
  const TruncatedSeries one_s1 = poly(2, 2, {{{0, 0}, 1.0}, {{1, 0}, 1.0}});
  const TruncatedSeries one_s2 = poly(2, 2, {{{0, 0}, 1.0}, {{0, 1}, 1.0}});
  const TruncatedSeries p = mul(one_s1, one_s2);
  CHECK(at(p, {0, 0}) == 1.0);
  CHECK(at(p, {1, 0}) == 1.0);
  CHECK(at(p, {0, 1}) == 1.0);
  CHECK(at(p, {1, 1}) == 1.0);
  CHECK(at(p, {2, 0}) == 0.0);
  CHECK(at(p, {0, 2}) == 0.0);

  const TruncatedSeries x = poly(2, 3, {{{2, 1}, 1.0}});
  const TruncatedSeries dx = diff(x, 0);
  CHECK(at(dx, {1, 1}) == 2.0);
  double rest = 0.0;
  for (double c : dx.coefficients()) rest += std::abs(c);
  CHECK(rest == 2.0);

  const TruncatedSeries s1 = TruncatedSeries::variable(2, 1, 0);
  const TruncatedSeries sq = mul(s1, s1);
  for (double c : sq.coefficients()) CHECK(c == 0.0);

  CHECK(at(shift(x, 1), {2, 2}) == 0.0);  // degree 4 falls off at order 3
  CHECK(at(shift(poly(2, 3, {{{1, 0}, 2.0}}), 1), {1, 1}) == 2.0);
}

TEST_CASE("inverse and exponential examples") {
  const TruncatedSeries one_minus = poly(1, 3, {{{0}, 1.0}, {{1}, -1.0}});
  const TruncatedSeries g = inv(one_minus);
  for (int k = 0; k <= 3; ++k) CHECK(at(g, {k}) == 1.0);

  const TruncatedSeries e0 = exp_series(TruncatedSeries(2, 4));
  CHECK(e0.constant_term() == 1.0);
  for (std::size_t i = 1; i < e0.size(); ++i) CHECK(e0[i] == 0.0);

  // exp(mu (s - 1)) is the Poisson pgf.
  const double mu = 0.8;
  const TruncatedSeries arg = poly(1, 6, {{{0}, -mu}, {{1}, mu}});
  const TruncatedSeries e = exp_series(arg);
  CHECK(at(e, {2}) == doctest::Approx(0.14378526851751092).epsilon(1e-14));
  for (int k = 0; k <= 6; ++k) CHECK(at(e, {k}) == doctest::Approx(oracle::poisson_pmf(mu, k)).epsilon(1e-13));

  CHECK_THROWS_AS(inv(TruncatedSeries::variable(1, 3, 0)), DomainError);
}

TEST_CASE("arity and order mismatches are rejected") {
  CHECK_THROWS_AS(mul(TruncatedSeries(2, 3), TruncatedSeries(1, 3)), DomainError);
  CHECK_THROWS_AS(add(TruncatedSeries(2, 3), TruncatedSeries(2, 4)), DomainError);
}

TEST_CASE("ring properties on random series") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 12; ++trial) {
    const int m = 1 + trial % 3;
    const int n = 3 + trial % 4;
    const TruncatedSeries a = random_series(rng, m, n);
    const TruncatedSeries b = random_series(rng, m, n);
    const TruncatedSeries c = random_series(rng, m, n);
    CHECK(max_diff(mul(a, b), naive_mul(a, b)) <= 1e-12);
    CHECK(max_diff(mul(a, b), mul(b, a)) <= 1e-12);
    CHECK(max_diff(mul(mul(a, b), c), mul(a, mul(b, c))) <= 1e-11);
    CHECK(max_diff(mul(a, add(b, c)), add(mul(a, b), mul(a, c))) <= 1e-12);

    TruncatedSeries unit = a;
    unit += 3.0;  // keep the constant term away from zero
    const TruncatedSeries id = mul(unit, inv(unit));
    CHECK(id.constant_term() == doctest::Approx(1.0).epsilon(1e-13));
    for (std::size_t i = 1; i < id.size(); ++i) CHECK(std::abs(id[i]) <= 1e-11);

    CHECK(max_diff(pow(a, 3), mul(a, mul(a, a))) <= 1e-11);
    CHECK(max_diff(exp_series(add(a, b)), mul(exp_series(a), exp_series(b))) <= 1e-9);

    // Product rule for diff, which keeps the order.
    for (int j = 0; j < m; ++j) {
      TruncatedSeries lhs = diff(mul(a, b), j);
      TruncatedSeries rhs = add(mul(diff(a, j), b), mul(a, diff(b, j)));
      // Degree n - 1 of the rhs sees terms the truncated product already dropped.
      for (std::size_t i = 0; i < lhs.layout().offset(n - 1); ++i) CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-11);
    }
  }
}

TEST_CASE("offspring pgf examples") {
  Eigen::VectorXi x00(2), x10(2);
  x00 << 0, 0;
  x10 << 1, 0;
  std::vector<OffspringDist> laws{OffspringDist::table({{x00, 0.5}, {x10, 0.5}}),
                                  OffspringDist::table({{x00, 1.0}})};
  const OffspringModel affine(std::move(laws), Eigen::Vector2d(0.5, 0.5));
  const std::vector<TruncatedSeries> vars{TruncatedSeries::variable(2, 3, 0), TruncatedSeries::variable(2, 3, 1)};
  const TruncatedSeries g = offspring_pgf(affine, 0, vars);
  CHECK(at(g, {0, 0}) == 0.5);
  CHECK(at(g, {1, 0}) == 0.5);
  CHECK(at(g, {0, 1}) == 0.0);

  const std::vector<TruncatedSeries> zeros{TruncatedSeries(2, 3), TruncatedSeries(2, 3)};
  const TruncatedSeries g0 = offspring_pgf(affine, 0, zeros);
  CHECK(g0.constant_term() == 0.5);

  const OffspringModel poisson = oracle::poisson_model(Eigen::MatrixXd::Constant(1, 1, 0.8), Eigen::VectorXd::Ones(1));
  const TruncatedSeries gp = offspring_pgf(poisson, 0, 2);
  const double e = std::exp(-0.8);
  CHECK(at(gp, {0}) == doctest::Approx(e).epsilon(1e-15));
  CHECK(at(gp, {1}) == doctest::Approx(0.8 * e).epsilon(1e-15));
  CHECK(at(gp, {2}) == doctest::Approx(0.32 * e).epsilon(1e-15));
}
