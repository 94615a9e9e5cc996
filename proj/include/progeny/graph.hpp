#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "progeny/model.hpp"

namespace progeny {

/// Inhomogeneous Erdos-Renyi graph: n vertices, type fractions q, and edge
/// probability min(kappa_ij / n, 1) between a type-i and a type-j vertex.
struct KernelGraphSpec {
  long long n = 0;
  Eigen::VectorXd q;
  Eigen::MatrixXd kappa;
};

std::vector<Violation> validate(const KernelGraphSpec& spec);

/// Poisson branching process with mu_ij = q_j kappa_ij and root law q.
OffspringModel local_limit_model(const KernelGraphSpec& spec);

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n);
  std::size_t find(std::size_t v);
  /// Union by size; returns false if already joined.
  bool unite(std::size_t a, std::size_t b);
  std::size_t size_of(std::size_t v) { return size_[find(v)]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

struct GraphSample {
  /// Vertices per type; type-i vertices occupy one contiguous id range.
  Eigen::VectorXi type_counts;
  long long edges = 0;
  /// Per-component type counts, ordered by smallest vertex id.
  std::vector<Eigen::VectorXi> components;
  double perron_root = 0.0;
  bool supercritical = false;
  /// Index of the largest component when the kernel is supercritical, else -1.
  long long giant = -1;
};

/// Exact sample: vertex type counts ray(q, n), then for every type pair a
/// binomial edge count placed on distinct uniformly chosen vertex pairs (no
/// self-loops), then union-find.
GraphSample sample_components(const KernelGraphSpec& spec, std::uint64_t seed);

struct SizeComparison {
  int size = 0;
  long long components = 0;
  /// Fraction of vertices lying in components of this size.
  double empirical = 0.0;
  /// P(|T| = size) for the local limit.
  double predicted = 0.0;
  double sigma = 0.0;
  double z = 0.0;
};

struct GraphComparison {
  std::vector<SizeComparison> sizes;
  int min_size = 0;
  long long large_components = 0;
  /// Unweighted mean of count / size over components with size >= min_size;
  /// empty when there are none.
  Eigen::VectorXd mean_composition;
  Eigen::VectorXd rho_star;
  double l1_distance = 0.0;
};

GraphComparison compare_with_branching(const KernelGraphSpec& spec, const GraphSample& sample, int max_size = 6,
                                       int min_size = 20);

/// CSV `component_id,size,count_1,...,count_m`, preceded by `#` lines.
void write_components_csv(std::ostream& os, const GraphSample& sample, const std::vector<std::string>& header = {});

}  // namespace progeny
