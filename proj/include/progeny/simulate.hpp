#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "progeny/model.hpp"

namespace progeny {

struct SimConfig {
  std::uint64_t samples = 1;
  /// Trees growing beyond this many individuals are stopped and flagged.
  std::uint64_t cap = 1000;
  std::uint64_t seed = 0;
  /// Exponential tilt of every offspring law, exp(lambda . x) P(X_k = x).
  std::optional<Eigen::VectorXd> tilt_lambda;
  /// Worker threads; 0 picks the hardware concurrency. Output does not depend on it.
  unsigned threads = 0;
};

struct SimRecord {
  Eigen::VectorXi t;
  double weight = 1.0;
  double log_weight = 0.0;
  bool censored = false;
  int root_type = 0;
};

struct SimBatch {
  std::vector<SimRecord> records;
  std::uint64_t model_fingerprint = 0;
  SimConfig config;
};

/// Count-based breadth-first simulation of the total progeny. Weights are the
/// likelihood ratios exp(-lambda . (T - e_root)) prod_k M_k(lambda)^{T_k},
/// accumulated per drawn offspring vector; they are exactly 1 without a tilt.
SimBatch sample(const OffspringModel& model, const SimConfig& config);

/// Closed-form log weight of an uncensored record.
double closed_form_log_weight(const OffspringModel& model, const Eigen::VectorXd& lambda, const SimRecord& record);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t hits = 0;
  /// (sum w)^2 / sum w^2 over the hits.
  double effective_sample_size = 0.0;
};

/// Horvitz-Thompson estimate of P(T = n). Censored records count as zero.
Estimate estimate_pmf(const SimBatch& batch, const Eigen::VectorXi& n);
/// Estimate of P(lo <= |T| <= hi).
Estimate estimate_size_window(const SimBatch& batch, long lo, long hi);

struct CompositionStats {
  Eigen::VectorXd mean;
  std::size_t count = 0;
  double weight_sum = 0.0;
};

/// Weighted mean of T / |T| over uncensored records with lo <= |T| <= hi;
/// nullopt when no record falls in the window.
std::optional<CompositionStats> composition_stats(const SimBatch& batch, long lo, long hi);

/// CSV `t_1,...,t_m,weight,censored`, preceded by `#` lines: the given header
/// lines, then the config echo as JSON.
void write_csv(std::ostream& os, const SimBatch& batch, const std::vector<std::string>& header = {});

/// JSON echo of the config and model fingerprint.
std::string config_json(const SimBatch& batch);

}  // namespace progeny
