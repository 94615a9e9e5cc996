#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "progeny/model.hpp"
#include "progeny/series.hpp"

namespace progeny {

/// Exact total-progeny law for all |n| <= order.
struct ProgenyTable {
  int order = 0;
  /// by_root[i] is the generating function of T^(i): [s^n] = P(T^(i) = n).
  std::vector<TruncatedSeries> by_root;
  /// sum_i p_i by_root[i]: [s^n] = P(T = n).
  TruncatedSeries mixed;

  int types() const { return static_cast<int>(by_root.size()); }
  double q(int root_type, const Eigen::VectorXi& n) const { return by_root.at(static_cast<std::size_t>(root_type)).coeff(n); }
  double at(const Eigen::VectorXi& n) const { return mixed.coeff(n); }
  /// P(|T| = size), size <= order.
  double mass_at_size(int size) const;
  /// Sum of P(T = n) over |n| <= order.
  double total_mass() const;
};

/// G_{X_k}(args_1, ..., args_m), truncated at the order of the arguments.
TruncatedSeries offspring_pgf(const OffspringModel& model, int k, std::span<const TruncatedSeries> args);

/// G_{X_k}(r) itself as a truncated series in r.
TruncatedSeries offspring_pgf(const OffspringModel& model, int k, int order);

/// Fixed point of G_{T_i} = s_i G_{X_i}(G_{T_1}, ..., G_{T_m}), computed one
/// homogeneous degree at a time. Degree d of every G_{T_i} only depends on
/// degrees < d, so a single sweep yields the same coefficients as N rounds of
/// the plain iteration.
///
/// With `underflow_guard`, a NumericError is thrown if any coefficient ends up
/// subnormal.
ProgenyTable solve_progeny(const OffspringModel& model, int order, bool underflow_guard = true);

/// The plain iteration G^(t+1)_i = s_i G_{X_i}(G^(t)) started from G^(0) = 0.
std::vector<TruncatedSeries> iterate_progeny(const OffspringModel& model, int order, int iterations);

/// One plain iteration applied to `g`.
std::vector<TruncatedSeries> fixed_point_step(const OffspringModel& model, std::span<const TruncatedSeries> g);

/// Assembles a table from per-root generating functions.
ProgenyTable make_table(const OffspringModel& model, std::vector<TruncatedSeries> by_root);

/// Independent oracle: direct subtree decomposition
///   q_i(n) = sum_x P(X_i = x) P(x_1 copies of T^(1) + ... + x_m copies of T^(m) = n - e_i)
/// using explicit sparse convolution powers. Table laws only.
ProgenyTable recursion_oracle(const OffspringModel& model, int order);

/// Largest |n| accepted by the inversion oracles.
inline constexpr int kOracleBudget = 10;

/// P(T = n) from the determinant form of multivariate Lagrange inversion:
///   sum_k p_k [r^n] r_k det K(r) prod_i G_{X_i}^{n_i},
///   K_ij = delta_ij - (r_i / G_{X_i}) dG_{X_i}/dr_j.
/// Requires m <= 4 and |n| <= budget.
double lagrange_good_oracle(const OffspringModel& model, const Eigen::VectorXi& n, int budget = kOracleBudget);

/// P(T = n) from arborescent Lagrange inversion: a sum over all trees on
/// {0, ..., m} directed toward 0 of nonnegative tree-derivative terms.
/// Requires n_i >= 1 for every i, m <= 3 and |n| <= budget.
double arborescent_oracle(const OffspringModel& model, const Eigen::VectorXi& n, int budget = kOracleBudget);

/// The single summand of the arborescent sum for the directed path m -> ... -> 1 -> 0,
/// divided by prod n_i. A lower bound on P(T = n).
double path_tree_term(const OffspringModel& model, const Eigen::VectorXi& n, int budget = kOracleBudget);

/// Every tree on {0, ..., m} directed toward 0, as parent arrays (parent[0] = -1).
/// Enumerated from Pruefer sequences; there are (m + 1)^(m - 1) of them.
std::vector<std::vector<int>> rooted_trees(int m);

/// Generating function of X_1^(1) + ... + X_1^(c_1) + ... + X_m^(c_m) (independent
/// copies), i.e. prod_k G_{X_k}^{c_k}, truncated at `order`.
TruncatedSeries iid_sum_series(const OffspringModel& model, const Eigen::VectorXi& counts, int order);

/// CSV: n_1,...,n_m,root_type,probability; rows in graded lexicographic order of
/// n (|n| >= 1), root types 1..m followed by the `mixed` pseudo-root.
void write_csv(std::ostream& os, const ProgenyTable& table);

}  // namespace progeny
