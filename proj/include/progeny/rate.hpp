#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "progeny/model.hpp"

namespace progeny {

struct RateOptions {
  /// Every rho_j must be at least this large.
  double interior_margin = 1e-6;
  double grad_tol = 1e-10;
  int max_iter = 200;
  /// |lambda| beyond this means the supremum is not attained.
  double divergence_radius = 1e3;
};

/// Gamma(rho) = sup_lambda { lambda . rho - sum_k rho_k log E[exp(lambda . X_k)] }.
struct RateResult {
  Eigen::VectorXd rho;
  double gamma = 0.0;
  Eigen::VectorXd lambda_star;
  /// |rho - sum_k rho_k grad log M_k(lambda*)|
  double grad_residual = 0.0;
  int iterations = 0;
};

/// The concave objective lambda . rho - sum_k rho_k log M_k(lambda).
double rate_objective(const OffspringModel& model, const Eigen::VectorXd& rho, const Eigen::VectorXd& lambda);

/// Damped Newton ascent from lambda = 0 with Armijo backtracking.
/// Throws DomainError for rho off the interior of the simplex and NumericError
/// when |lambda| leaves the divergence radius or the iteration budget runs out.
RateResult gamma(const OffspringModel& model, const Eigen::VectorXd& rho, const RateOptions& options = {});

/// Closed form for Poisson products: sum_j rho_j log(rho_j / nu_j) + nu_j - rho_j with
/// nu = rho A. Returns +infinity when some nu_j = 0 < rho_j.
double gamma_closed_poisson(const OffspringModel& model, const Eigen::VectorXd& rho);

/// Gradient of Gamma in rho at a solved point: lambda* - (log M_k(lambda*))_k.
Eigen::VectorXd gamma_gradient(const OffspringModel& model, const RateResult& r);

struct RhoStarRun {
  Eigen::VectorXd start;
  Eigen::VectorXd rho;
  double gamma = 0.0;
  double projected_gradient = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct RhoStarResult {
  Eigen::VectorXd rho;
  double gamma = 0.0;
  Eigen::VectorXd lambda_star;
  std::vector<RhoStarRun> runs;
  /// Runs ended more than 1e-6 apart in Gamma.
  bool disagreement = false;
};

struct RhoStarOptions {
  double tol = 1e-8;
  int max_iter = 500;
  double disagreement_tol = 1e-6;
  RateOptions rate;
};

/// Minimizes Gamma over the simplex with BFGS on softmax coordinates, started from
/// the barycenter and from each vertex pulled toward the interior.
RhoStarResult rho_star(const OffspringModel& model, const RhoStarOptions& options = {});

struct EigenvectorCheck {
  Eigen::VectorXd eigenvector;  ///< left Perron vector of the mean matrix, on the simplex
  Eigen::VectorXd rho_star;
  double l1_distance = 0.0;
  bool reducible = false;
  int iterations = 0;
};

/// For a right-stochastic mean matrix, compares rho* with the left Perron vector.
/// Throws DomainError (listing the row sums) otherwise.
EigenvectorCheck principal_eigenvector_check(const OffspringModel& model, const RhoStarOptions& options = {});

/// Law of a tilted shifted coordinate X^'_{ij} = X_{ij} - delta_{ij} under exp(tau_j x).
struct TiltedMarginal {
  bool poisson = false;
  double poisson_mean = 0.0;  ///< Poisson kind
  std::vector<double> pmf;    ///< Table kind, indexed by the unshifted value
  int offset = 0;             ///< -delta_ij

  double mean() const;
  double variance() const;
  /// P(X^' = x).
  double probability(int x) const;
};

struct TiltSolution {
  Eigen::VectorXd rho;
  Eigen::VectorXd tau;
  Eigen::VectorXd phi_min;      ///< phi_j(tau_j)
  Eigen::VectorXd log_phi_min;  ///< log phi_j(tau_j)
  Eigen::VectorXd derivative_residual;
  /// tilted[i][j] is the law of the tilted X^'_{ij}.
  std::vector<std::vector<TiltedMarginal>> tilted;
};

/// log phi_j(t) = sum_k rho_k log E[exp(t X^'_{kj})] and its first two derivatives.
struct LogPhi {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};
LogPhi log_phi(const OffspringModel& model, const Eigen::VectorXd& rho, int j, double t);

/// Per-coordinate minimizers tau_j of phi_j (Newton with a bisection safeguard) and
/// the tilted marginal laws. Needs independent offspring coordinates.
TiltSolution tilt(const OffspringModel& model, const Eigen::VectorXd& rho, const RateOptions& options = {});

struct TiltDiagnostics {
  Eigen::VectorXd mean;      ///< M^_j(n)
  Eigen::VectorXd variance;  ///< V^_j(n)
  /// sum_k rho_k E[X^'_{kj}] (zero at the minimizers).
  Eigen::VectorXd centered_residual;
  /// Moments of the untilted auxiliary variables Y_{kj}.
  Eigen::MatrixXd y_mean;
  Eigen::MatrixXd y_variance;
  /// Some Y_k could not be normalized (zero derivative); X_k was used instead.
  bool y_degenerate = false;
};

TiltDiagnostics tilt_diagnostics(const OffspringModel& model, const Eigen::VectorXd& rho, const Eigen::VectorXi& n,
                                  const RateOptions& options = {});

/// log of exp(-lambda . target) prod_k M_k(lambda)^{counts_k}, the Chernoff bound on
/// P(sum of counts_k copies of X_k = target).
double chernoff_log_bound(const OffspringModel& model, const Eigen::VectorXi& counts, const Eigen::VectorXi& target,
                          const Eigen::VectorXd& lambda);

}  // namespace progeny
