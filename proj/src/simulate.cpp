#include "progeny/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "progeny/errors.hpp"
#include "progeny/model_io.hpp"
#include "progeny/random.hpp"

namespace progeny {

namespace {

struct TypeSampler {
  bool poisson = false;
  Eigen::VectorXd means;  // tilted Poisson means
  AliasTable alias;
  std::vector<Eigen::VectorXi> support;
  double log_m = 0.0;
};

std::vector<TypeSampler> build_samplers(const OffspringModel& model, const Eigen::VectorXd& lambda, bool tilted) {
  std::vector<TypeSampler> out;
  const int m = model.types();
  out.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    const OffspringDist& d = model.offspring(k);
    TypeSampler s;
    if (tilted) s.log_m = cumulant(d, lambda).value;
    if (d.is_poisson()) {
      s.poisson = true;
      s.means = d.mu();
      if (tilted) s.means = (d.mu().array() * lambda.array().exp()).matrix();
    } else {
      std::vector<double> logw;
      for (const TableEntry& e : d.entries()) {
        if (e.mass <= 0.0) continue;
        s.support.push_back(e.x);
        logw.push_back(std::log(e.mass) + (tilted ? lambda.dot(e.x.cast<double>()) : 0.0));
      }
      const double top = *std::max_element(logw.begin(), logw.end());
      std::vector<double> w(logw.size());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logw[i] - top);
      s.alias = AliasTable(w);
    }
    out.push_back(std::move(s));
  }
  return out;
}

SimRecord run_one(const std::vector<TypeSampler>& samplers, const AliasTable& root_alias, const Eigen::VectorXd& lambda,
                  bool tilted, std::uint64_t cap, std::uint64_t seed, std::uint64_t index) {
  const int m = static_cast<int>(samplers.size());
  CounterRng rng = CounterRng::stream(seed, index);
  SimRecord rec;
  rec.root_type = static_cast<int>(root_alias.sample(rng));
  std::vector<std::uint64_t> total(static_cast<std::size_t>(m), 0);
  std::vector<std::uint64_t> pending(static_cast<std::size_t>(m), 0);
  total[static_cast<std::size_t>(rec.root_type)] = 1;
  pending[static_cast<std::size_t>(rec.root_type)] = 1;
  std::uint64_t size = 1;
  double logw = 0.0;

  while (size <= cap) {
    int k = 0;
    while (k < m && pending[static_cast<std::size_t>(k)] == 0) ++k;
    if (k == m) break;
    const TypeSampler& s = samplers[static_cast<std::size_t>(k)];
    if (s.poisson) {
      // A sum of c independent Poisson vectors is one Poisson vector with c times the mean.
      const std::uint64_t c = pending[static_cast<std::size_t>(k)];
      pending[static_cast<std::size_t>(k)] = 0;
      if (tilted) logw += static_cast<double>(c) * s.log_m;
      for (int j = 0; j < m; ++j) {
        const std::uint64_t x = sample_poisson(rng, static_cast<double>(c) * s.means(j));
        total[static_cast<std::size_t>(j)] += x;
        pending[static_cast<std::size_t>(j)] += x;
        size += x;
        if (tilted) logw -= lambda(j) * static_cast<double>(x);
      }
    } else {
      --pending[static_cast<std::size_t>(k)];
      const Eigen::VectorXi& x = s.support[s.alias.sample(rng)];
      if (tilted) logw += s.log_m;
      for (int j = 0; j < m; ++j) {
        const auto xj = static_cast<std::uint64_t>(x(j));
        total[static_cast<std::size_t>(j)] += xj;
        pending[static_cast<std::size_t>(j)] += xj;
        size += xj;
        if (tilted) logw -= lambda(j) * static_cast<double>(xj);
      }
    }
  }

  rec.censored = size > cap;
  rec.t.resize(m);
  for (int j = 0; j < m; ++j) {
    rec.t(j) = static_cast<int>(std::min<std::uint64_t>(total[static_cast<std::size_t>(j)], 0x7fffffffULL));
  }
  rec.log_weight = logw;
  rec.weight = tilted ? std::exp(logw) : 1.0;
  return rec;
}

bool in_window(const SimRecord& r, long lo, long hi) {
  if (r.censored) return false;
  const long s = r.t.sum();
  return s >= lo && s <= hi;
}

template <class Pred>
Estimate horvitz_thompson(const SimBatch& batch, Pred hit) {
  const auto n = static_cast<double>(batch.records.size());
  if (batch.records.empty()) throw DomainError("empty batch");
  Estimate e;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const SimRecord& r : batch.records) {
    if (!hit(r)) continue;
    ++e.hits;
    sum += r.weight;
    sum_sq += r.weight * r.weight;
  }
  e.value = sum / n;
  if (n > 1.0) {
    // Sample variance of w * 1{hit}, including the zero terms.
    const double var = std::max(0.0, (sum_sq - n * e.value * e.value) / (n - 1.0));
    e.std_error = std::sqrt(var / n);
  }
  e.effective_sample_size = sum_sq > 0.0 ? sum * sum / sum_sq : 0.0;
  return e;
}

}  // namespace

SimBatch sample(const OffspringModel& model, const SimConfig& config) {
  if (config.samples < 1) throw DomainError("samples must be at least 1");
  if (config.cap < 1) throw DomainError("cap must be at least 1");
  const auto violations = validate(model);
  if (has_errors(violations)) throw DomainError(violations.front().field + ": " + violations.front().message);
  const int m = model.types();
  const bool tilted = config.tilt_lambda.has_value();
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  if (tilted) {
    if (config.tilt_lambda->size() != m) throw DomainError("tilt vector has the wrong length");
    if (!config.tilt_lambda->allFinite()) throw DomainError("tilt vector must be finite");
    lambda = *config.tilt_lambda;
  }

  const auto samplers = build_samplers(model, lambda, tilted);
  const AliasTable root_alias(std::vector<double>(model.root().data(), model.root().data() + m));

  SimBatch batch;
  batch.config = config;
  batch.model_fingerprint = fingerprint(model);
  batch.records.resize(config.samples);

  unsigned workers = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, config.samples));
  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t r = begin; r < end; ++r) {
      batch.records[r] = run_one(samplers, root_alias, lambda, tilted, config.cap, config.seed, r);
    }
  };
  if (workers <= 1) {
    work(0, config.samples);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (config.samples + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t b = std::min<std::uint64_t>(config.samples, w * chunk);
      const std::uint64_t e = std::min<std::uint64_t>(config.samples, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
  }
  return batch;
}

double closed_form_log_weight(const OffspringModel& model, const Eigen::VectorXd& lambda, const SimRecord& record) {
  double lw = 0.0;
  for (int k = 0; k < model.types(); ++k) {
    lw += static_cast<double>(record.t(k)) * cumulant(model.offspring(k), lambda).value;
  }
  Eigen::VectorXd offspring = record.t.cast<double>();
  offspring(record.root_type) -= 1.0;
  return lw - lambda.dot(offspring);
}

Estimate estimate_pmf(const SimBatch& batch, const Eigen::VectorXi& n) {
  return horvitz_thompson(batch, [&](const SimRecord& r) { return !r.censored && r.t == n; });
}

Estimate estimate_size_window(const SimBatch& batch, long lo, long hi) {
  return horvitz_thompson(batch, [&](const SimRecord& r) { return in_window(r, lo, hi); });
}

std::optional<CompositionStats> composition_stats(const SimBatch& batch, long lo, long hi) {
  if (batch.records.empty()) throw DomainError("empty batch");
  CompositionStats s;
  for (const SimRecord& r : batch.records) {
    if (!in_window(r, lo, hi)) continue;
    const Eigen::VectorXd frac = r.t.cast<double>() / static_cast<double>(r.t.sum());
    if (s.count == 0) s.mean = Eigen::VectorXd::Zero(r.t.size());
    s.mean += r.weight * frac;
    s.weight_sum += r.weight;
    ++s.count;
  }
  if (s.count == 0 || !(s.weight_sum > 0.0)) return std::nullopt;
  s.mean /= s.weight_sum;
  return s;
}

std::string config_json(const SimBatch& batch) {
  nlohmann::json j;
  j["samples"] = batch.config.samples;
  j["cap"] = batch.config.cap;
  j["seed"] = batch.config.seed;
  if (batch.config.tilt_lambda) {
    j["tilt_lambda"] = std::vector<double>(batch.config.tilt_lambda->data(),
                                           batch.config.tilt_lambda->data() + batch.config.tilt_lambda->size());
  } else {
    j["tilt_lambda"] = nullptr;
  }
  std::ostringstream fp;
  fp << std::hex << std::setw(16) << std::setfill('0') << batch.model_fingerprint;
  j["model_fingerprint"] = fp.str();
  return j.dump();
}

void write_csv(std::ostream& os, const SimBatch& batch, const std::vector<std::string>& header) {
  for (const std::string& h : header) os << "# " << h << '\n';
  os << "# " << config_json(batch) << '\n';
  const int m = batch.records.empty() ? 0 : static_cast<int>(batch.records.front().t.size());
  for (int j = 0; j < m; ++j) os << "t_" << (j + 1) << ',';
  os << "weight,censored\n";
  os << std::setprecision(17);
  for (const SimRecord& r : batch.records) {
    for (int j = 0; j < m; ++j) os << r.t(j) << ',';
    os << r.weight << ',' << (r.censored ? 1 : 0) << '\n';
  }
}

}  // namespace progeny
