#include "progeny/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "progeny/errors.hpp"

namespace progeny {

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(15);
  os << v;
  return os.str();
}

std::string type_label(int k) { return "type " + std::to_string(k + 1); }

}  // namespace

OffspringDist OffspringDist::table(std::vector<TableEntry> entries) {
  if (entries.empty()) throw DomainError("offspring table must have at least one entry");
  OffspringDist d;
  d.kind_ = Kind::Table;
  d.arity_ = static_cast<int>(entries.front().x.size());
  for (const auto& e : entries) {
    if (e.x.size() != d.arity_) throw DomainError("offspring table entries disagree on arity");
  }
  d.entries_ = std::move(entries);
  return d;
}

OffspringDist OffspringDist::poisson_product(Eigen::VectorXd mu) {
  if (mu.size() == 0) throw DomainError("poisson_product needs a nonempty mean vector");
  OffspringDist d;
  d.kind_ = Kind::PoissonProduct;
  d.arity_ = static_cast<int>(mu.size());
  d.mu_ = std::move(mu);
  return d;
}

double OffspringDist::mass_at_zero() const {
  if (is_poisson()) return std::exp(-mu_.sum());
  for (const auto& e : entries_) {
    if ((e.x.array() == 0).all()) return e.mass;
  }
  return 0.0;
}

Eigen::VectorXd OffspringDist::mean() const {
  if (is_poisson()) return mu_;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(arity_);
  for (const auto& e : entries_) m += e.mass * e.x.cast<double>();
  return m;
}

Eigen::VectorXi OffspringDist::max_exponent() const {
  if (!is_table()) throw DomainError("max_exponent requires a Table law");
  Eigen::VectorXi mx = Eigen::VectorXi::Zero(arity_);
  for (const auto& e : entries_) mx = mx.cwiseMax(e.x);
  return mx;
}

OffspringModel::OffspringModel(std::vector<OffspringDist> offspring, Eigen::VectorXd root,
                               std::vector<std::string> type_names)
    : offspring_(std::move(offspring)), root_(std::move(root)), names_(std::move(type_names)) {
  const auto m = static_cast<Eigen::Index>(offspring_.size());
  if (m == 0) throw DomainError("model needs at least one type");
  if (root_.size() != m) {
    throw DomainError("root has " + std::to_string(root_.size()) + " entries, expected " +
                      std::to_string(m));
  }
  for (std::size_t k = 0; k < offspring_.size(); ++k) {
    if (offspring_[k].arity() != m) {
      throw DomainError(type_label(static_cast<int>(k)) + ": offspring arity " +
                        std::to_string(offspring_[k].arity()) + " differs from " +
                        std::to_string(m) + " types");
    }
  }
  if (names_.empty()) {
    for (Eigen::Index k = 0; k < m; ++k) names_.push_back(std::to_string(k + 1));
  }
  if (static_cast<Eigen::Index>(names_.size()) != m) {
    throw DomainError("type name count differs from offspring count");
  }
}

bool OffspringModel::all_poisson() const {
  return std::all_of(offspring_.begin(), offspring_.end(),
                     [](const OffspringDist& d) { return d.is_poisson(); });
}

bool OffspringModel::all_table() const {
  return std::all_of(offspring_.begin(), offspring_.end(),
                     [](const OffspringDist& d) { return d.is_table(); });
}

OffspringModel OffspringModel::with_root(Eigen::VectorXd root) const {
  return OffspringModel(offspring_, std::move(root), names_);
}

std::vector<Violation> validate(const OffspringModel& model) {
  std::vector<Violation> out;
  auto error = [&](std::string field, std::string msg) {
    out.push_back({std::move(field), std::move(msg), Violation::Severity::Error});
  };

  const Eigen::VectorXd& root = model.root();
  if (!root.allFinite() || (root.array() < 0.0).any()) {
    error("root", "root entries must be finite and nonnegative");
  }
  const double root_sum = root.sum();
  if (std::abs(root_sum - 1.0) > 1e-12) error("root", "root sums to " + fmt_double(root_sum));

  for (int k = 0; k < model.types(); ++k) {
    const OffspringDist& d = model.offspring(k);
    const std::string field = "offspring[" + std::to_string(k) + "]";
    if (d.is_table()) {
      double total = 0.0;
      std::set<std::vector<int>> seen;
      for (const auto& e : d.entries()) {
        if (!std::isfinite(e.mass) || e.mass < 0.0) {
          error(field, type_label(k) + ": table mass must be finite and nonnegative");
        } else if (e.mass == 0.0) {
          error(field, type_label(k) + ": zero-mass table entry");
        }
        if ((e.x.array() < 0).any()) error(field, type_label(k) + ": negative exponent");
        if (!seen.insert(std::vector<int>(e.x.data(), e.x.data() + e.x.size())).second) {
          error(field, type_label(k) + ": duplicate exponent vector");
        }
        total += e.mass;
      }
      if (std::abs(total - 1.0) > 1e-12) {
        error(field, type_label(k) + ": table masses sum to " + fmt_double(total));
      }
    } else {
      const Eigen::VectorXd& mu = d.mu();
      if (!mu.allFinite() || (mu.array() < 0.0).any()) {
        error(field, type_label(k) + ": Poisson means must be finite and nonnegative");
      } else if ((mu.array() == 0.0).any()) {
        out.push_back({field, type_label(k) + ": zero Poisson mean, support-degenerate",
                       Violation::Severity::Warning});
      }
    }
    if (!(d.mass_at_zero() > 0.0)) {
      error(field, type_label(k) + ": no mass at zero offspring, |T| = \xE2\x88\x9E a.s.");
    }
  }
  return out;
}

bool has_errors(const std::vector<Violation>& violations) {
  return std::any_of(violations.begin(), violations.end(), [](const Violation& v) {
    return v.severity == Violation::Severity::Error;
  });
}

Cumulant cumulant(const OffspringDist& dist, const Eigen::VectorXd& lambda) {
  const auto m = dist.arity();
  if (lambda.size() != m) throw DomainError("lambda has the wrong dimension");
  Cumulant c;
  if (dist.is_poisson()) {
    const Eigen::VectorXd tilted = dist.mu().array() * lambda.array().exp();
    c.value = (tilted - dist.mu()).sum();
    c.grad = tilted;
    c.hess = tilted.asDiagonal();
    return c;
  }
  const auto& entries = dist.entries();
  std::vector<double> a(entries.size());
  double amax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    a[i] = std::log(entries[i].mass) + lambda.dot(entries[i].x.cast<double>());
    amax = std::max(amax, a[i]);
  }
  double s = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    a[i] = std::exp(a[i] - amax);
    s += a[i];
    mean += a[i] * entries[i].x.cast<double>();
  }
  mean /= s;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Eigen::VectorXd d = entries[i].x.cast<double>() - mean;
    cov.noalias() += (a[i] / s) * d * d.transpose();
  }
  // A probability law has E[exp(0 . X)] = 1; table masses only sum to 1 up to rounding.
  c.value = lambda.isZero(0.0) ? 0.0 : amax + std::log(s);
  c.grad = std::move(mean);
  c.hess = std::move(cov);
  return c;
}

double log_mgf(const OffspringModel& model, int k, const Eigen::VectorXd& lambda) {
  const OffspringDist& d = model.offspring(k);
  if (d.is_poisson()) {
    if (lambda.size() != d.arity()) throw DomainError("lambda has the wrong dimension");
    return (d.mu().array() * (lambda.array().exp() - 1.0)).sum();
  }
  return cumulant(d, lambda).value;
}

double mgf(const OffspringModel& model, int k, const Eigen::VectorXd& lambda) {
  const double v = log_mgf(model, k, lambda);
  if (v > std::log(std::numeric_limits<double>::max())) {
    throw NumericError("mgf overflows a double (log value " + fmt_double(v) +
                       "); use log_mgf instead");
  }
  return std::exp(v);
}

Eigen::VectorXd grad_log_mgf(const OffspringModel& model, int k, const Eigen::VectorXd& lambda) {
  return cumulant(model.offspring(k), lambda).grad;
}

Eigen::MatrixXd mean_matrix(const OffspringModel& model) {
  const int m = model.types();
  Eigen::MatrixXd a(m, m);
  for (int k = 0; k < m; ++k) a.row(k) = model.offspring(k).mean().transpose();
  return a;
}

PerronResult perron(const Eigen::MatrixXd& a, double tol, int max_iter) {
  if (a.rows() != a.cols() || a.rows() == 0) throw DomainError("perron needs a square matrix");
  if (!a.allFinite() || (a.array() < 0.0).any()) {
    throw DomainError("perron needs a finite nonnegative matrix");
  }
  const auto m = a.rows();
  // Iterating on A + I keeps the Perron root dominant for periodic matrices.
  const Eigen::MatrixXd shifted = a + Eigen::MatrixXd::Identity(m, m);
  PerronResult r;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd w = shifted * v;
    const double norm = w.sum();
    v = w / norm;
    const double est = norm - 1.0;
    const double residual = (a * v - est * v).cwiseAbs().maxCoeff();
    r.iterations = it;
    if (residual <= tol * std::max(1.0, std::abs(est))) {
      r.value = est;
      r.vector = v;
      r.converged = true;
      return r;
    }
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  const auto& ev = es.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < ev.size(); ++i) {
    if (ev[i].real() > ev[best].real()) best = i;
  }
  r.value = ev[best].real();
  Eigen::VectorXd vec = es.eigenvectors().col(best).real().cwiseAbs();
  r.vector = vec / vec.sum();
  r.used_fallback = true;
  r.converged = false;
  return r;
}

double perron_root(const Eigen::MatrixXd& a) { return perron(a).value; }

Criticality classify(const OffspringModel& model, double tol) {
  const double r = perron_root(mean_matrix(model));
  if (r < 1.0 - tol) return Criticality::Subcritical;
  if (r > 1.0 + tol) return Criticality::Supercritical;
  return Criticality::Critical;
}

const char* to_string(Criticality c) {
  switch (c) {
    case Criticality::Subcritical: return "subcritical";
    case Criticality::Critical: return "critical";
    case Criticality::Supercritical: return "supercritical";
  }
  return "unknown";
}

Eigen::VectorXi ray(const Eigen::VectorXd& rho, int total) {
  if (rho.size() == 0 || (rho.array() < 0.0).any()) throw DomainError("ray needs a stochastic vector");
  if (total < 0) throw DomainError("ray needs a nonnegative total");
  const auto m = rho.size();
  Eigen::VectorXi n(m);
  std::vector<double> frac(static_cast<std::size_t>(m));
  int assigned = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double target = rho[j] * total;
    n[j] = static_cast<int>(std::floor(target));
    frac[static_cast<std::size_t>(j)] = target - n[j];
    assigned += n[j];
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return frac[static_cast<std::size_t>(a)] > frac[static_cast<std::size_t>(b)];
  });
  for (int extra = total - assigned, i = 0; extra > 0; --extra, ++i) {
    ++n[order[static_cast<std::size_t>(i) % order.size()]];
  }
  // rho summing slightly above one can overshoot; trim from the smallest remainders.
  for (int excess = assigned - total, i = static_cast<int>(m) - 1; excess > 0 && i >= 0; --i) {
    auto j = order[static_cast<std::size_t>(i)];
    const int take = std::min(excess, n[j]);
    n[j] -= take;
    excess -= take;
  }
  return n;
}

TableConversion to_table(const OffspringDist& dist, double tail) {
  if (dist.is_table()) return {dist, 0.0};
  const auto m = dist.arity();
  std::vector<std::vector<double>> pmf(static_cast<std::size_t>(m));
  double kept_product = 1.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double mu = dist.mu()[j];
    auto& p = pmf[static_cast<std::size_t>(j)];
    p.push_back(std::exp(-mu));
    if (mu == 0.0) continue;
    double bound = 1.0;
    for (int k = 0;; ++k) {
      const double next = p.back() * mu / (k + 1);
      // Geometric bound on the remaining tail once the ratio mu/(k+2) is below one.
      const double ratio = mu / (k + 2);
      if (ratio < 1.0) {
        bound = next / (1.0 - ratio);
        if (bound < tail) break;
      }
      p.push_back(next);
    }
    kept_product *= 1.0 - bound;
  }
  std::vector<TableEntry> entries;
  Eigen::VectorXi x = Eigen::VectorXi::Zero(m);
  double underflow = 0.0;
  while (true) {
    double mass = 1.0;
    for (Eigen::Index j = 0; j < m; ++j) mass *= pmf[static_cast<std::size_t>(j)][static_cast<std::size_t>(x[j])];
    if (mass > 0.0) {
      entries.push_back({x, mass});
    } else {
      underflow += std::numeric_limits<double>::min();
    }
    Eigen::Index j = 0;
    for (; j < m; ++j) {
      if (++x[j] < static_cast<int>(pmf[static_cast<std::size_t>(j)].size())) break;
      x[j] = 0;
    }
    if (j == m) break;
  }
  return {OffspringDist::table(std::move(entries)), 1.0 - kept_product + underflow};
}

std::vector<double> marginal_pmf(const OffspringDist& dist, int j) {
  if (!dist.is_table()) throw DomainError("marginal_pmf requires a Table law");
  std::vector<double> p(static_cast<std::size_t>(dist.max_exponent()[j]) + 1, 0.0);
  for (const auto& e : dist.entries()) p[static_cast<std::size_t>(e.x[j])] += e.mass;
  return p;
}

bool is_product_form(const OffspringDist& dist, double tol) {
  if (dist.is_poisson()) return true;
  const int m = dist.arity();
  std::vector<std::vector<double>> marg;
  for (int j = 0; j < m; ++j) marg.push_back(marginal_pmf(dist, j));
  double discrepancy = 0.0;
  double covered = 0.0;
  for (const auto& e : dist.entries()) {
    double prod = 1.0;
    for (int j = 0; j < m; ++j) prod *= marg[static_cast<std::size_t>(j)][static_cast<std::size_t>(e.x[j])];
    discrepancy += std::abs(e.mass - prod);
    covered += prod;
  }
  discrepancy += std::abs(1.0 - covered);
  return discrepancy <= tol;
}

}  // namespace progeny
