#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace progeny {

/// One support point of a tabulated offspring law: exponent vector and its mass.
struct TableEntry {
  Eigen::VectorXi x;
  double mass = 0.0;
};

/// Law of the offspring vector X_k of a single parent type.
///
/// Two parameterizations are kept: an explicit finite table, and a product of
/// independent Poisson coordinates (kept parametric so its MGF and PGF stay exact).
class OffspringDist {
 public:
  enum class Kind { Table, PoissonProduct };

  static OffspringDist table(std::vector<TableEntry> entries);
  static OffspringDist poisson_product(Eigen::VectorXd mu);

  Kind kind() const { return kind_; }
  bool is_table() const { return kind_ == Kind::Table; }
  bool is_poisson() const { return kind_ == Kind::PoissonProduct; }
  int arity() const { return arity_; }

  const std::vector<TableEntry>& entries() const { return entries_; }
  const Eigen::VectorXd& mu() const { return mu_; }

  double mass_at_zero() const;
  Eigen::VectorXd mean() const;
  /// Largest exponent per coordinate (Table kind only).
  Eigen::VectorXi max_exponent() const;

 private:
  Kind kind_ = Kind::Table;
  int arity_ = 0;
  std::vector<TableEntry> entries_;
  Eigen::VectorXd mu_;
};

/// A complete multi-type process: per-type offspring laws and the root-type law.
class OffspringModel {
 public:
  OffspringModel() = default;
  /// Throws DomainError when the shapes disagree (every law must have arity m and
  /// the root vector length m). Value-level checks live in validate().
  OffspringModel(std::vector<OffspringDist> offspring, Eigen::VectorXd root,
                 std::vector<std::string> type_names = {});

  int types() const { return static_cast<int>(offspring_.size()); }
  const OffspringDist& offspring(int k) const { return offspring_.at(static_cast<std::size_t>(k)); }
  const std::vector<OffspringDist>& offspring() const { return offspring_; }
  const Eigen::VectorXd& root() const { return root_; }
  const std::vector<std::string>& type_names() const { return names_; }

  bool all_poisson() const;
  bool all_table() const;

  /// Same offspring laws, different root distribution.
  OffspringModel with_root(Eigen::VectorXd root) const;

 private:
  std::vector<OffspringDist> offspring_;
  Eigen::VectorXd root_;
  std::vector<std::string> names_;
};

struct Violation {
  enum class Severity { Error, Warning };
  std::string field;
  std::string message;
  Severity severity = Severity::Error;
};

/// Checks every value-level invariant of the model. Violations are returned as
/// data; the list is empty iff the model is fully valid. PoissonProduct entries
/// equal to zero are reported as warnings (support-degenerate), not errors.
std::vector<Violation> validate(const OffspringModel& model);

/// True when no violation of Error severity is present.
bool has_errors(const std::vector<Violation>& violations);

/// E[exp(lambda . X_k)]. Throws NumericError if the value overflows a double.
double mgf(const OffspringModel& model, int k, const Eigen::VectorXd& lambda);
/// log E[exp(lambda . X_k)], computed in log space.
double log_mgf(const OffspringModel& model, int k, const Eigen::VectorXd& lambda);
/// E[X_k exp(lambda . X_k)] / E[exp(lambda . X_k)].
Eigen::VectorXd grad_log_mgf(const OffspringModel& model, int k, const Eigen::VectorXd& lambda);

/// Value, gradient and Hessian of the cumulant generating function in one pass.
struct Cumulant {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};
Cumulant cumulant(const OffspringDist& dist, const Eigen::VectorXd& lambda);

/// A_{kj} = E[X_{kj}].
Eigen::MatrixXd mean_matrix(const OffspringModel& model);

struct PerronResult {
  double value = 0.0;
  Eigen::VectorXd vector;  ///< right eigenvector, L1-normalized
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
};

/// Perron root of a nonnegative matrix by shifted power iteration, falling back
/// to a dense eigen-decomposition when the iteration stalls.
PerronResult perron(const Eigen::MatrixXd& a, double tol = 1e-12, int max_iter = 100000);
double perron_root(const Eigen::MatrixXd& a);

enum class Criticality { Subcritical, Critical, Supercritical };
Criticality classify(const OffspringModel& model, double tol = 1e-9);
const char* to_string(Criticality c);

/// Integer vector of total N closest to N * rho (largest remainder, ties to the
/// lowest index).
Eigen::VectorXi ray(const Eigen::VectorXd& rho, int total);

/// Poisson product law expanded into an explicit table. Each coordinate is
/// truncated once its tail mass drops below `tail`; nothing is renormalized.
struct TableConversion {
  OffspringDist table;
  double dropped_mass = 0.0;
};
TableConversion to_table(const OffspringDist& dist, double tail = 1e-15);

/// Marginal pmf of coordinate j of a Table law, indexed by value.
std::vector<double> marginal_pmf(const OffspringDist& dist, int j);

/// True if the coordinates of a Table law are independent within `tol`
/// (Poisson products always are).
bool is_product_form(const OffspringDist& dist, double tol = 1e-12);

}  // namespace progeny
