#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "progeny/errors.hpp"
#include "progeny/progeny.hpp"

using namespace progeny;

namespace {

Eigen::VectorXi vec(std::initializer_list<int> v) {
  Eigen::VectorXi out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (int x : v) out(i++) = x;
  return out;
}

const OffspringModel& bernoulli_model() {
  static const OffspringModel m = oracle::uniform_root({oracle::bernoulli(0.3)});
  return m;
}

OffspringModel childless(int m) {
  std::vector<OffspringDist> laws;
  for (int k = 0; k < m; ++k) laws.push_back(OffspringDist::table({{Eigen::VectorXi::Zero(m), 1.0}}));
  return oracle::uniform_root(std::move(laws));
}

}  // namespace

TEST_CASE("childless types give root-only trees") {
  const OffspringModel model = childless(2);
  for (const ProgenyTable& t : {solve_progeny(model, 5), recursion_oracle(model, 5)}) {
    CHECK(t.q(0, vec({1, 0})) == 1.0);
    CHECK(t.q(1, vec({0, 1})) == 1.0);
    CHECK(t.q(0, vec({0, 1})) == 0.0);
    CHECK(t.at(vec({1, 1})) == 0.0);
    CHECK(t.total_mass() == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("single-type closed forms") {
  const ProgenyTable geo = solve_progeny(bernoulli_model(), 50);
  CHECK(geo.at(vec({3})) == doctest::Approx(0.063).epsilon(1e-14));
  for (int n = 1; n <= 50; ++n) CHECK(std::abs(geo.at(vec({n})) - oracle::geometric_pmf(0.3, n)) <= 1e-15);

  const OffspringModel borel = oracle::poisson_model(Eigen::MatrixXd::Constant(1, 1, 0.8), Eigen::VectorXd::Ones(1));
  const ProgenyTable b = solve_progeny(borel, 60);
  CHECK(b.at(vec({2})) == doctest::Approx(0.1615172143957243).epsilon(1e-14));
  for (int n = 1; n <= 60; ++n) CHECK(oracle::rel_diff(b.at(vec({n})), oracle::borel_pmf(0.8, n)) <= 1e-12);
}

TEST_CASE("oracle spot values on the Bernoulli tree") {
  CHECK(recursion_oracle(bernoulli_model(), 4).at(vec({2})) == doctest::Approx(0.21).epsilon(1e-14));
  CHECK(lagrange_good_oracle(bernoulli_model(), vec({3})) == doctest::Approx(0.063).epsilon(1e-14));
  CHECK(arborescent_oracle(bernoulli_model(), vec({2})) == doctest::Approx(0.21).epsilon(1e-14));
  CHECK(path_tree_term(bernoulli_model(), vec({2})) == doctest::Approx(0.21).epsilon(1e-14));
}

TEST_CASE("recursion oracle matches the online solve on random 2-type tables") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const OffspringModel model = oracle::random_table_model(rng);
    const ProgenyTable a = solve_progeny(model, 12);
    const ProgenyTable b = recursion_oracle(model, 12);
    for (int i = 0; i < 2; ++i) {
      for (std::size_t idx = 0; idx < a.mixed.size(); ++idx) {
        CHECK(std::abs(a.by_root[static_cast<std::size_t>(i)][idx] - b.by_root[static_cast<std::size_t>(i)][idx]) <=
              1e-12);
      }
    }
  }
}

TEST_CASE("inversion oracles agree on random models") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 6; ++trial) {
    const OffspringModel model = oracle::random_table_model(rng);
    const ProgenyTable t = solve_progeny(model, 8);
    for (int a = 0; a <= 8; ++a) {
      for (int b = 0; a + b <= 8; ++b) {
        if (a + b == 0) continue;
        const Eigen::VectorXi n = vec({a, b});
        const double lg = lagrange_good_oracle(model, n);
        CHECK(oracle::rel_diff(lg, t.at(n)) <= 1e-10);
        if (a >= 1 && b >= 1) {
          const double ar = arborescent_oracle(model, n);
          CHECK(oracle::rel_diff(ar, lg) <= 1e-10);
          CHECK(path_tree_term(model, n) <= ar + 1e-14);
          CHECK(path_tree_term(model, n) >= 0.0);
        }
      }
    }
  }
}

TEST_CASE("three-type oracles") {
  std::mt19937_64 rng(33);
  std::vector<OffspringDist> laws;
  for (int k = 0; k < 3; ++k) laws.push_back(oracle::random_product_table(rng, 3));
  const OffspringModel model = oracle::uniform_root(std::move(laws));
  const ProgenyTable t = solve_progeny(model, 6);
  const ProgenyTable r = recursion_oracle(model, 6);
  for (const Eigen::VectorXi& n : {vec({1, 1, 1}), vec({2, 1, 1}), vec({1, 2, 2}), vec({2, 2, 2}), vec({3, 1, 2})}) {
    CHECK(oracle::rel_diff(t.at(n), r.at(n)) <= 1e-12);
    CHECK(oracle::rel_diff(t.at(n), lagrange_good_oracle(model, n)) <= 1e-10);
    CHECK(oracle::rel_diff(t.at(n), arborescent_oracle(model, n)) <= 1e-10);
    CHECK(path_tree_term(model, n) <= t.at(n) + 1e-14);
  }
}

TEST_CASE("single-node trees") {
  std::mt19937_64 rng(34);
  const OffspringModel model = oracle::random_table_model(rng);
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXi e = Eigen::VectorXi::Zero(2);
    e(i) = 1;
    const double expect = model.root()(i) * model.offspring(i).mass_at_zero();
    CHECK(lagrange_good_oracle(model, e) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(solve_progeny(model, 3).at(e) == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("oracle preconditions") {
  const OffspringModel poisson = oracle::poisson_model(Eigen::MatrixXd::Constant(1, 1, 0.8), Eigen::VectorXd::Ones(1));
  CHECK_THROWS_AS(recursion_oracle(poisson, 4), DomainError);
  CHECK_THROWS_AS(lagrange_good_oracle(bernoulli_model(), vec({kOracleBudget + 1})), DomainError);
  std::mt19937_64 rng(35);
  const OffspringModel two = oracle::random_table_model(rng);
  CHECK_THROWS_AS(arborescent_oracle(two, vec({0, 3})), DomainError);
}

TEST_CASE("rooted trees are enumerated completely") {
  CHECK(rooted_trees(1).size() == 1);
  CHECK(rooted_trees(2).size() == 3);
  CHECK(rooted_trees(3).size() == 16);
  for (const auto& parent : rooted_trees(3)) {
    CHECK(parent[0] == -1);
    // Every vertex reaches 0.
    for (int v = 1; v <= 3; ++v) {
      int u = v;
      int steps = 0;
      while (u != 0 && steps++ < 4) u = parent[static_cast<std::size_t>(u)];
      CHECK(u == 0);
    }
  }
}

TEST_CASE("table structure invariants") {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 5; ++trial) {
    const OffspringModel model = trial % 2 ? oracle::random_table_model(rng) : oracle::random_poisson_model(rng, 2);
    double previous = 0.0;
    for (int n : {4, 8, 16, 32}) {
      const ProgenyTable t = solve_progeny(model, n);
      const double mass = t.total_mass();
      CHECK(mass >= previous);
      CHECK(mass <= 1.0 + 1e-12);
      previous = mass;
      for (std::size_t idx = 0; idx < t.mixed.size(); ++idx) {
        CHECK(t.mixed[idx] >= 0.0);
        CHECK(t.mixed[idx] <= 1.0);
      }
    }
    // Every tree rooted at i contains a type-i node.
    const ProgenyTable t = solve_progeny(model, 10);
    for (int a = 0; a <= 10; ++a) {
      CHECK(t.q(0, vec({0, a})) == 0.0);
      CHECK(t.q(1, vec({a, 0})) == 0.0);
    }
  }
}

TEST_CASE("plain iteration reaches the online solution and stays there") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 4; ++trial) {
    const OffspringModel model = trial % 2 ? oracle::random_table_model(rng) : oracle::random_poisson_model(rng, 2);
    const int n = 12;
    const auto g = iterate_progeny(model, n, n);
    const auto next = fixed_point_step(model, g);
    const ProgenyTable online = solve_progeny(model, n);
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t idx = 0; idx < g[i].size(); ++idx) {
        CHECK(oracle::rel_diff(g[i][idx], next[i][idx]) <= 1e-15);
        CHECK(oracle::rel_diff(g[i][idx], online.by_root[i][idx]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("supercritical models give a defective law") {
  const OffspringModel model = oracle::poisson_model(Eigen::MatrixXd::Constant(1, 1, 1.5), Eigen::VectorXd::Ones(1));
  const ProgenyTable t = solve_progeny(model, 200);
  // Extinction probability of Poisson(1.5) is about 0.417.
  CHECK(t.total_mass() < 0.45);
  CHECK(t.total_mass() > 0.38);
}

TEST_CASE("underflow guard") {
  // p^62 = 1e-310 lies below the smallest normal double.
  const OffspringModel tiny = oracle::uniform_root({oracle::bernoulli(1e-5)});
  CHECK_NOTHROW(solve_progeny(tiny, 60));
  CHECK_THROWS_AS(solve_progeny(tiny, 70), NumericError);
  CHECK_NOTHROW(solve_progeny(tiny, 70, false));
}

TEST_CASE("iid sums match direct convolution") {
  std::mt19937_64 rng(38);
  const OffspringModel model = oracle::random_table_model(rng);
  for (const auto& counts : {std::vector<int>{1, 0}, std::vector<int>{2, 1}, std::vector<int>{2, 3}}) {
    const int order = 2 * (counts[0] + counts[1]);
    const TruncatedSeries s = iid_sum_series(model, Eigen::Vector2i(counts[0], counts[1]), order);
    const oracle::SparseLaw law = oracle::iid_sum_by_convolution(model, counts, order);
    double total = 0.0;
    for (const auto& [x, p] : law) {
      CHECK(s.coeff(std::span<const int>(x.data(), x.size())) == doctest::Approx(p).epsilon(1e-13));
      total += p;
    }
    double series_total = 0.0;
    for (double c : s.coefficients()) series_total += c;
    CHECK(series_total == doctest::Approx(total).epsilon(1e-13));
  }
}

TEST_CASE("csv layout") {
  const OffspringModel model = childless(2);
  std::ostringstream os;
  write_csv(os, solve_progeny(model, 2));
  const std::string csv = os.str();
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "n_1,n_2,root_type,probability");
  std::getline(in, line);
  CHECK(line == "0,1,1,0");
  std::getline(in, line);
  CHECK(line == "0,1,2,1");
  std::getline(in, line);
  CHECK(line == "0,1,mixed,0.5");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  // Remaining rows: (1,0) then the three of degree 2, three root labels each.
  CHECK(rows == 3 + 9);
  CHECK(csv.find('\r') == std::string::npos);
}
