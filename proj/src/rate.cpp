#include "progeny/rate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>

#include "progeny/errors.hpp"

namespace progeny {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << x;
  return os.str();
}

void check_direction(const OffspringModel& model, const Eigen::VectorXd& rho, double margin) {
  if (rho.size() != model.types()) {
    throw DomainError("rho has " + std::to_string(rho.size()) + " entries, expected " +
                      std::to_string(model.types()));
  }
  if (!rho.allFinite() || std::abs(rho.sum() - 1.0) > 1e-9) throw DomainError("rho must sum to 1");
  if (rho.minCoeff() < margin) {
    std::ostringstream os;
    os << "rho must lie in the interior of the simplex (every entry >= " << margin << ")";
    throw DomainError(os.str());
  }
}

struct Objective {
  double value = 0.0;
  // Magnitude of the summed terms; bounds the rounding error in value.
  double scale = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;  // Hessian of the concave objective (negative semidefinite)
};

Objective evaluate(const OffspringModel& model, const Eigen::VectorXd& rho, const Eigen::VectorXd& lambda) {
  const int m = model.types();
  Objective o;
  o.value = lambda.dot(rho);
  o.scale = std::abs(o.value);
  o.grad = rho;
  o.hess = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    const Cumulant c = cumulant(model.offspring(k), lambda);
    o.value -= rho[k] * c.value;
    o.scale += rho[k] * std::abs(c.value);
    o.grad -= rho[k] * c.grad;
    o.hess -= rho[k] * c.hess;
  }
  return o;
}

// Moments of a pmf given by masses indexed by value.
std::pair<double, double> pmf_moments(const std::vector<double>& p) {
  double s = 0.0;
  double mean = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    s += p[x];
    mean += static_cast<double>(x) * p[x];
  }
  mean /= s;
  double var = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    const double d = static_cast<double>(x) - mean;
    var += d * d * p[x];
  }
  return {mean, var / s};
}

// Cumulant of one coordinate X_{kj} at scalar t: value, first and second derivative.
LogPhi marginal_cumulant(const OffspringDist& dist, int j, double t) {
  LogPhi r;
  if (dist.is_poisson()) {
    const double mu = dist.mu()[j];
    const double et = mu * std::exp(t);
    r.value = et - mu;
    r.d1 = et;
    r.d2 = et;
    return r;
  }
  const std::vector<double> p = marginal_pmf(dist, j);
  double amax = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] > 0.0) amax = std::max(amax, std::log(p[x]) + t * static_cast<double>(x));
  }
  std::vector<double> w(p.size(), 0.0);
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] > 0.0) w[x] = std::exp(std::log(p[x]) + t * static_cast<double>(x) - amax);
  }
  const auto [mean, var] = pmf_moments(w);
  double s = 0.0;
  for (double v : w) s += v;
  r.value = amax + std::log(s);
  r.d1 = mean;
  r.d2 = var;
  return r;
}

TiltedMarginal tilted_marginal(const OffspringDist& dist, int i, int j, double tau) {
  TiltedMarginal tm;
  tm.offset = (i == j) ? -1 : 0;
  if (dist.is_poisson()) {
    tm.poisson = true;
    tm.poisson_mean = dist.mu()[j] * std::exp(tau);
    return tm;
  }
  const std::vector<double> p = marginal_pmf(dist, j);
  double amax = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] > 0.0) amax = std::max(amax, std::log(p[x]) + tau * static_cast<double>(x));
  }
  tm.pmf.assign(p.size(), 0.0);
  double s = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] > 0.0) tm.pmf[x] = std::exp(std::log(p[x]) + tau * static_cast<double>(x) - amax);
    s += tm.pmf[x];
  }
  for (double& v : tm.pmf) v /= s;
  return tm;
}

// Law of coordinate j of Y_k (untilted): X_k, or the normalized derivative of its PGF
// in r_v. Returns {mean, variance}; `degenerate` is set when dG/dr_v vanishes.
std::pair<double, double> y_moments(const OffspringDist& dist, int j, int v, bool& degenerate) {
  if (dist.is_poisson()) {
    if (v >= 0 && dist.mu()[v] == 0.0) degenerate = true;
    const double mu = dist.mu()[j];
    return {mu, mu};
  }
  std::vector<double> p = marginal_pmf(dist, j);
  if (v == j) {
    // Normalized derivative of a one-dimensional PGF: q(x) ~ (x + 1) p(x + 1).
    std::vector<double> q(p.size() > 1 ? p.size() - 1 : 1, 0.0);
    double s = 0.0;
    for (std::size_t x = 0; x + 1 < p.size(); ++x) {
      q[x] = static_cast<double>(x + 1) * p[x + 1];
      s += q[x];
    }
    if (s > 0.0) return pmf_moments(q);
    degenerate = true;
  } else if (v >= 0) {
    const std::vector<double> pv = marginal_pmf(dist, v);
    double mean_v = 0.0;
    for (std::size_t x = 0; x < pv.size(); ++x) mean_v += static_cast<double>(x) * pv[x];
    if (mean_v == 0.0) degenerate = true;
  }
  return pmf_moments(p);
}

void check_product_form(const OffspringModel& model) {
  for (int k = 0; k < model.types(); ++k) {
    if (!is_product_form(model.offspring(k))) {
      throw DomainError("type " + std::to_string(k + 1) +
                        ": offspring coordinates are not independent; the per-coordinate tilt needs a product law");
    }
  }
}

}  // namespace

double rate_objective(const OffspringModel& model, const Eigen::VectorXd& rho, const Eigen::VectorXd& lambda) {
  double v = lambda.dot(rho);
  for (int k = 0; k < model.types(); ++k) v -= rho[k] * log_mgf(model, k, lambda);
  return v;
}

RateResult gamma(const OffspringModel& model, const Eigen::VectorXd& rho, const RateOptions& options) {
  check_direction(model, rho, options.interior_margin);
  const int m = model.types();
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  Objective cur = evaluate(model, rho, lambda);
  RateResult r;
  r.rho = rho;
  for (int it = 0;; ++it) {
    r.iterations = it;
    if (cur.grad.norm() <= options.grad_tol) {
      // A vanishing gradient with a long Newton step means the objective is still climbing
      // along a flattening direction.
      Eigen::LDLT<Eigen::MatrixXd> ldlt(-cur.hess);
      const Eigen::VectorXd newton = ldlt.solve(cur.grad);
      if (ldlt.info() != Eigen::Success || !newton.allFinite() ||
          newton.norm() > 1e-3 * (1.0 + lambda.norm())) {
        throw NumericError("Gamma supremum not attained: objective still increasing at |lambda| = " +
                           sci(lambda.norm()) + " (Newton step " + sci(newton.norm()) + ")");
      }
      break;
    }
    if (it == options.max_iter) {
      throw NumericError("Gamma solver did not converge within " + std::to_string(options.max_iter) +
                         " iterations (gradient norm " + sci(cur.grad.norm()) + ")");
    }
    Eigen::VectorXd dir;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-cur.hess);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      dir = ldlt.solve(cur.grad);
      if (!dir.allFinite() || dir.dot(cur.grad) <= 0.0) dir = cur.grad;
    } else {
      dir = cur.grad;
    }
    const double slope = cur.grad.dot(dir);
    double step = 1.0;
    Objective next;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::VectorXd trial = lambda + step * dir;
      next = evaluate(model, rho, trial);
      // Near the optimum the increase drops below the rounding noise of the objective;
      // a full step that shrinks the gradient is then accepted on its own.
      const double noise = 8.0 * kEps * (cur.scale + next.scale);
      if (std::isfinite(next.value) && (next.value >= cur.value + 1e-4 * step * slope - noise ||
                                         (bt == 0 && cur.grad.norm() < 1e-6 && next.grad.norm() < 0.5 * cur.grad.norm()))) {
        lambda = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      throw NumericError("Gamma line search failed (gradient norm " + sci(cur.grad.norm()) + ")");
    }
    cur = std::move(next);
    if (lambda.norm() > options.divergence_radius) {
      throw NumericError("Gamma supremum not attained: |lambda| exceeded " + std::to_string(options.divergence_radius));
    }
  }
  r.gamma = cur.value;
  r.lambda_star = lambda;
  r.grad_residual = cur.grad.norm();
  return r;
}

double gamma_closed_poisson(const OffspringModel& model, const Eigen::VectorXd& rho) {
  if (!model.all_poisson()) throw DomainError("gamma_closed_poisson needs Poisson product laws");
  check_direction(model, rho, 0.0);
  const Eigen::VectorXd nu = mean_matrix(model).transpose() * rho;
  double g = 0.0;
  for (int j = 0; j < model.types(); ++j) {
    if (rho[j] == 0.0) {
      g += nu[j];
      continue;
    }
    if (nu[j] == 0.0) return std::numeric_limits<double>::infinity();
    g += rho[j] * std::log(rho[j] / nu[j]) + nu[j] - rho[j];
  }
  return g;
}

Eigen::VectorXd gamma_gradient(const OffspringModel& model, const RateResult& r) {
  Eigen::VectorXd g = r.lambda_star;
  for (int k = 0; k < model.types(); ++k) g[k] -= log_mgf(model, k, r.lambda_star);
  return g;
}

RhoStarResult rho_star(const OffspringModel& model, const RhoStarOptions& options) {
  const int m = model.types();
  RhoStarResult out;
  if (m == 1) {
    Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    const RateResult r = gamma(model, one, options.rate);
    out.rho = one;
    out.gamma = r.gamma;
    out.lambda_star = r.lambda_star;
    out.runs.push_back({one, one, r.gamma, 0.0, 0, true});
    return out;
  }

  auto softmax = [](const Eigen::VectorXd& theta) {
    Eigen::VectorXd e = (theta.array() - theta.maxCoeff()).exp();
    return Eigen::VectorXd(e / e.sum());
  };
  struct Eval {
    bool ok = false;
    double value = 0.0;
    Eigen::VectorXd rho;
    Eigen::VectorXd grad_theta;
    double projected = 0.0;
    RateResult rate;
  };
  auto eval = [&](const Eigen::VectorXd& theta) {
    Eval e;
    e.rho = softmax(theta);
    try {
      e.rate = gamma(model, e.rho, options.rate);
    } catch (const Error&) {
      return e;
    }
    e.ok = true;
    e.value = e.rate.gamma;
    const Eigen::VectorXd g = gamma_gradient(model, e.rate);
    const Eigen::VectorXd proj = g.array() - g.mean();
    e.projected = proj.norm();
    const Eigen::MatrixXd jac = Eigen::MatrixXd(e.rho.asDiagonal()) - e.rho * e.rho.transpose();
    e.grad_theta = jac * g;
    return e;
  };

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Constant(m, 1.0 / m));
  for (int v = 0; v < m; ++v) {
    Eigen::VectorXd s = Eigen::VectorXd::Constant(m, 0.3 / m);
    s[v] += 0.7;
    starts.push_back(s);
  }

  for (const auto& start : starts) {
    RhoStarRun run;
    run.start = start;
    Eigen::VectorXd theta = start.array().log();
    Eval cur = eval(theta);
    if (!cur.ok) throw NumericError("Gamma could not be evaluated at a rho* start point");
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(m, m);
    for (int it = 0; it < options.max_iter; ++it) {
      run.iterations = it;
      if (cur.projected <= options.tol) {
        run.converged = true;
        break;
      }
      Eigen::VectorXd dir = -hinv * cur.grad_theta;
      double slope = dir.dot(cur.grad_theta);
      if (slope >= 0.0) {
        hinv.setIdentity();
        dir = -cur.grad_theta;
        slope = dir.dot(cur.grad_theta);
      }
      double step = 1.0;
      Eval next;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        next = eval(theta + step * dir);
        if (next.ok && next.value <= cur.value + 1e-4 * step * slope + 4.0 * kEps * std::abs(cur.value)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
      const Eigen::VectorXd s = step * dir;
      const Eigen::VectorXd y = next.grad_theta - cur.grad_theta;
      const double sy = s.dot(y);
      if (sy > 1e-18) {
        const double rho_bfgs = 1.0 / sy;
        const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(m, m);
        hinv = (id - rho_bfgs * s * y.transpose()) * hinv * (id - rho_bfgs * y * s.transpose()) +
               rho_bfgs * s * s.transpose();
      }
      theta += s;
      cur = std::move(next);
      run.iterations = it + 1;
    }
    if (cur.projected <= options.tol) run.converged = true;
    run.rho = cur.rho;
    run.gamma = cur.value;
    run.projected_gradient = cur.projected;
    if (out.runs.empty() || run.gamma < out.gamma) {
      out.rho = cur.rho;
      out.gamma = cur.value;
      out.lambda_star = cur.rate.lambda_star;
    }
    out.runs.push_back(std::move(run));
  }
  double lo = out.runs.front().gamma;
  double hi = lo;
  for (const auto& r : out.runs) {
    lo = std::min(lo, r.gamma);
    hi = std::max(hi, r.gamma);
  }
  out.disagreement = (hi - lo) > options.disagreement_tol;
  return out;
}

EigenvectorCheck principal_eigenvector_check(const OffspringModel& model, const RhoStarOptions& options) {
  const Eigen::MatrixXd a = mean_matrix(model);
  const Eigen::VectorXd row_sums = a.rowwise().sum();
  if (((row_sums.array() - 1.0).abs() > 1e-9).any()) {
    std::ostringstream os;
    os << "mean matrix is not right stochastic; row sums:";
    for (Eigen::Index i = 0; i < row_sums.size(); ++i) os << ' ' << row_sums[i];
    throw DomainError(os.str());
  }
  const auto m = a.rows();
  EigenvectorCheck out;

  // Strong connectivity of the support graph decides irreducibility.
  Eigen::MatrixXi reach = (a.array() > 0.0).cast<int>().matrix();
  reach += Eigen::MatrixXi::Identity(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (reach(i, k) && reach(k, j)) reach(i, j) = 1;
      }
    }
  }
  out.reducible = (reach.array() == 0).any();

  // Lazy power iteration on (I + A^T) / 2: same eigenvectors, aperiodic.
  const Eigen::MatrixXd lazy = 0.5 * (Eigen::MatrixXd::Identity(m, m) + a.transpose());
  Eigen::VectorXd v = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  for (int it = 1; it <= 100000; ++it) {
    Eigen::VectorXd w = lazy * v;
    w /= w.sum();
    const double change = (w - v).lpNorm<1>();
    v = std::move(w);
    out.iterations = it;
    if (change <= 1e-15) break;
  }
  out.eigenvector = v;
  out.rho_star = rho_star(model, options).rho;
  out.l1_distance = (out.rho_star - v).lpNorm<1>();
  return out;
}

double TiltedMarginal::mean() const {
  if (poisson) return poisson_mean + offset;
  return pmf_moments(pmf).first + offset;
}

double TiltedMarginal::variance() const {
  if (poisson) return poisson_mean;
  return pmf_moments(pmf).second;
}

double TiltedMarginal::probability(int x) const {
  const int raw = x - offset;
  if (raw < 0) return 0.0;
  if (poisson) return std::exp(raw * std::log(poisson_mean) - poisson_mean - std::lgamma(raw + 1.0));
  return static_cast<std::size_t>(raw) < pmf.size() ? pmf[static_cast<std::size_t>(raw)] : 0.0;
}

LogPhi log_phi(const OffspringModel& model, const Eigen::VectorXd& rho, int j, double t) {
  LogPhi r;
  for (int k = 0; k < model.types(); ++k) {
    const LogPhi c = marginal_cumulant(model.offspring(k), j, t);
    r.value += rho[k] * c.value;
    r.d1 += rho[k] * c.d1;
    r.d2 += rho[k] * c.d2;
  }
  // X^'_{jj} = X_{jj} - 1 shifts the cumulant by -t with weight rho_j.
  r.value -= rho[j] * t;
  r.d1 -= rho[j];
  return r;
}

TiltSolution tilt(const OffspringModel& model, const Eigen::VectorXd& rho, const RateOptions& options) {
  check_direction(model, rho, options.interior_margin);
  check_product_form(model);
  const int m = model.types();
  TiltSolution sol;
  sol.rho = rho;
  sol.tau.resize(m);
  sol.phi_min.resize(m);
  sol.log_phi_min.resize(m);
  sol.derivative_residual.resize(m);
  for (int j = 0; j < m; ++j) {
    auto d1 = [&](double t) { return log_phi(model, rho, j, t).d1; };
    double lo = -1.0;
    double hi = 1.0;
    while (d1(lo) > 0.0) {
      lo *= 2.0;
      if (lo < -options.divergence_radius) throw NumericError("tilt: no bracket below the minimizer");
    }
    while (d1(hi) < 0.0) {
      hi *= 2.0;
      if (hi > options.divergence_radius) {
        throw NumericError("tilt: phi_" + std::to_string(j + 1) + " has no minimizer (decreasing on the whole line)");
      }
    }
    double t = 0.0;
    LogPhi cur = log_phi(model, rho, j, t);
    for (int it = 0; it < 500 && std::abs(cur.d1) > 1e-12; ++it) {
      if (cur.d1 > 0.0) {
        hi = t;
      } else {
        lo = t;
      }
      double next = (cur.d2 > 0.0) ? t - cur.d1 / cur.d2 : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (next == t) break;
      t = next;
      cur = log_phi(model, rho, j, t);
    }
    sol.tau[j] = t;
    sol.log_phi_min[j] = cur.value;
    sol.phi_min[j] = std::exp(cur.value);
    sol.derivative_residual[j] = std::abs(cur.d1);
  }
  sol.tilted.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      sol.tilted[static_cast<std::size_t>(i)].push_back(tilted_marginal(model.offspring(i), i, j, sol.tau[j]));
    }
  }
  return sol;
}

TiltDiagnostics tilt_diagnostics(const OffspringModel& model, const Eigen::VectorXd& rho, const Eigen::VectorXi& n,
                                  const RateOptions& options) {
  const int m = model.types();
  if (n.size() != m || (n.array() < 0).any()) throw DomainError("n must be m nonnegative integers");
  const TiltSolution sol = tilt(model, rho, options);
  TiltDiagnostics d;
  d.mean = Eigen::VectorXd::Zero(m);
  d.variance = Eigen::VectorXd::Zero(m);
  d.centered_residual = Eigen::VectorXd::Zero(m);
  d.y_mean.resize(m, m);
  d.y_variance.resize(m, m);
  for (int k = 0; k < m; ++k) {
    // Directed path tree: Y_k ~ dG_{X_k}/dr_{k+1} for k < m, and Y_m = X_m.
    const int var = (k + 1 < m) ? k + 1 : -1;
    for (int j = 0; j < m; ++j) {
      const auto [ym, yv] = y_moments(model.offspring(k), j, var, d.y_degenerate);
      d.y_mean(k, j) = ym;
      d.y_variance(k, j) = yv;
    }
  }
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      const TiltedMarginal& tm = sol.tilted[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
      d.mean[j] += n[k] * tm.mean() + d.y_mean(k, j);
      d.variance[j] += n[k] * tm.variance() + d.y_variance(k, j);
      d.centered_residual[j] += rho[k] * tm.mean();
    }
  }
  return d;
}

double chernoff_log_bound(const OffspringModel& model, const Eigen::VectorXi& counts, const Eigen::VectorXi& target,
                          const Eigen::VectorXd& lambda) {
  double v = -lambda.dot(target.cast<double>());
  for (int k = 0; k < model.types(); ++k) {
    if (counts[k] > 0) v += counts[k] * log_mgf(model, k, lambda);
  }
  return v;
}

}  // namespace progeny
