#include "progeny/graph.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <ostream>
#include <random>
#include <unordered_set>

#include "progeny/errors.hpp"
#include "progeny/progeny.hpp"
#include "progeny/random.hpp"
#include "progeny/rate.hpp"

namespace progeny {

namespace {

constexpr long long kMaxVertices = 10'000'000;

struct Block {
  int i = 0;
  int j = 0;
  long long first_i = 0;
  long long first_j = 0;
  long long ni = 0;
  long long nj = 0;
  double p = 0.0;
};

using Edge = std::pair<long long, long long>;

// Pair number idx < C(n, 2) of an n-vertex clique, as (a, b) with a < b.
Edge triangular_pair(long long idx) {
  auto b = static_cast<long long>(std::floor((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(idx))) / 2.0));
  while (b * (b - 1) / 2 > idx) --b;
  while ((b + 1) * b / 2 <= idx) ++b;
  return {idx - b * (b - 1) / 2, b};
}

std::vector<Edge> sample_block(const Block& blk, std::uint64_t seed, std::uint64_t stream) {
  std::vector<Edge> edges;
  const bool diagonal = blk.i == blk.j;
  const long long pairs = diagonal ? blk.ni * (blk.ni - 1) / 2 : blk.ni * blk.nj;
  if (pairs <= 0 || blk.p <= 0.0) return edges;
  CounterRng rng = CounterRng::stream(seed, stream);
  long long count = pairs;
  if (blk.p < 1.0) count = std::binomial_distribution<long long>(pairs, blk.p)(rng);
  edges.reserve(static_cast<std::size_t>(count));

  // Floyd's algorithm: a uniform count-subset of [0, pairs) in O(count).
  std::unordered_set<long long> chosen;
  chosen.reserve(static_cast<std::size_t>(count) * 2);
  std::vector<long long> order;
  order.reserve(static_cast<std::size_t>(count));
  for (long long top = pairs - count; top < pairs; ++top) {
    const long long t = std::uniform_int_distribution<long long>(0, top)(rng);
    const long long pick = chosen.insert(t).second ? t : top;
    if (pick == top) chosen.insert(top);
    order.push_back(pick);
  }
  for (long long idx : order) {
    if (diagonal) {
      const auto [a, b] = triangular_pair(idx);
      edges.emplace_back(blk.first_i + a, blk.first_i + b);
    } else {
      edges.emplace_back(blk.first_i + idx / blk.nj, blk.first_j + idx % blk.nj);
    }
  }
  return edges;
}

}  // namespace

std::vector<Violation> validate(const KernelGraphSpec& spec) {
  std::vector<Violation> out;
  const auto m = spec.q.size();
  if (spec.n < 1) out.push_back({"n", "vertex count must be positive"});
  if (spec.n > kMaxVertices) out.push_back({"n", "vertex count above " + std::to_string(kMaxVertices)});
  if (m == 0) out.push_back({"q", "no types"});
  if (spec.kappa.rows() != m || spec.kappa.cols() != m) {
    out.push_back({"kappa", "kappa must be " + std::to_string(m) + "x" + std::to_string(m)});
    return out;
  }
  if (m > 0) {
    if ((spec.q.array() < 0.0).any() || !spec.q.allFinite()) out.push_back({"q", "fractions must be nonnegative"});
    if (std::abs(spec.q.sum() - 1.0) > 1e-9) out.push_back({"q", "fractions sum to " + std::to_string(spec.q.sum())});
    if ((spec.kappa.array() < 0.0).any() || !spec.kappa.allFinite()) {
      out.push_back({"kappa", "kernel must be nonnegative"});
    }
    if ((spec.kappa - spec.kappa.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      out.push_back({"kappa", "kernel must be symmetric"});
    }
  }
  return out;
}

OffspringModel local_limit_model(const KernelGraphSpec& spec) {
  const int m = static_cast<int>(spec.q.size());
  std::vector<OffspringDist> laws;
  laws.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    laws.push_back(OffspringDist::poisson_product((spec.kappa.row(i).transpose().array() * spec.q.array()).matrix()));
  }
  return OffspringModel(std::move(laws), spec.q);
}

DisjointSet::DisjointSet(std::size_t n) : parent_(n), size_(n, 1) {
  for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
}

std::size_t DisjointSet::find(std::size_t v) {
  while (parent_[v] != v) {
    parent_[v] = parent_[parent_[v]];
    v = parent_[v];
  }
  return v;
}

bool DisjointSet::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  return true;
}

GraphSample sample_components(const KernelGraphSpec& spec, std::uint64_t seed) {
  const auto violations = validate(spec);
  if (has_errors(violations)) throw DomainError(violations.front().field + ": " + violations.front().message);
  const int m = static_cast<int>(spec.q.size());
  const double n = static_cast<double>(spec.n);

  GraphSample out;
  out.type_counts = ray(spec.q, static_cast<int>(spec.n));
  std::vector<long long> first(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 0; i < m; ++i) first[static_cast<std::size_t>(i) + 1] = first[static_cast<std::size_t>(i)] + out.type_counts(i);

  std::vector<Block> blocks;
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      Block b;
      b.i = i;
      b.j = j;
      b.first_i = first[static_cast<std::size_t>(i)];
      b.first_j = first[static_cast<std::size_t>(j)];
      b.ni = out.type_counts(i);
      b.nj = out.type_counts(j);
      b.p = std::min(spec.kappa(i, j) / n, 1.0);
      blocks.push_back(b);
    }
  }
  std::vector<std::future<std::vector<Edge>>> jobs;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    jobs.push_back(std::async(std::launch::async, sample_block, blocks[b], seed, static_cast<std::uint64_t>(b)));
  }

  DisjointSet dsu(static_cast<std::size_t>(spec.n));
  for (auto& job : jobs) {
    const auto edges = job.get();
    out.edges += static_cast<long long>(edges.size());
    for (const auto& [a, b] : edges) dsu.unite(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  }

  std::vector<long long> component_of(static_cast<std::size_t>(spec.n), -1);
  int type = 0;
  for (long long v = 0; v < spec.n; ++v) {
    while (v >= first[static_cast<std::size_t>(type) + 1]) ++type;
    const std::size_t r = dsu.find(static_cast<std::size_t>(v));
    if (component_of[r] < 0) {
      component_of[r] = static_cast<long long>(out.components.size());
      out.components.push_back(Eigen::VectorXi::Zero(m));
    }
    ++out.components[static_cast<std::size_t>(component_of[r])](type);
  }

  out.perron_root = perron_root(mean_matrix(local_limit_model(spec)));
  out.supercritical = out.perron_root > 1.0;
  if (out.supercritical && !out.components.empty()) {
    long long best = 0;
    for (std::size_t c = 1; c < out.components.size(); ++c) {
      if (out.components[c].sum() > out.components[static_cast<std::size_t>(best)].sum()) best = static_cast<long long>(c);
    }
    out.giant = best;
  }
  return out;
}

GraphComparison compare_with_branching(const KernelGraphSpec& spec, const GraphSample& sample, int max_size,
                                       int min_size) {
  GraphComparison cmp;
  cmp.min_size = min_size;
  const OffspringModel model = local_limit_model(spec);
  const int m = model.types();
  const double n = static_cast<double>(spec.n);

  std::vector<long long> by_size(static_cast<std::size_t>(max_size) + 1, 0);
  Eigen::VectorXd comp = Eigen::VectorXd::Zero(m);
  for (const auto& c : sample.components) {
    const int s = c.sum();
    if (s <= max_size) ++by_size[static_cast<std::size_t>(s)];
    if (s >= min_size) {
      comp += c.cast<double>() / static_cast<double>(s);
      ++cmp.large_components;
    }
  }

  const ProgenyTable exact = solve_progeny(model, max_size);
  for (int s = 1; s <= max_size; ++s) {
    SizeComparison row;
    row.size = s;
    row.components = by_size[static_cast<std::size_t>(s)];
    row.empirical = static_cast<double>(s) * static_cast<double>(row.components) / n;
    row.predicted = exact.mass_at_size(s);
    // Component counts are close to Poisson with mean n P / s.
    row.sigma = std::sqrt(static_cast<double>(s) * row.predicted / n);
    row.z = row.sigma > 0.0 ? (row.empirical - row.predicted) / row.sigma : 0.0;
    cmp.sizes.push_back(row);
  }

  cmp.rho_star = rho_star(model).rho;
  if (cmp.large_components > 0) {
    cmp.mean_composition = comp / static_cast<double>(cmp.large_components);
    cmp.l1_distance = (cmp.mean_composition - cmp.rho_star).lpNorm<1>();
  }
  return cmp;
}

void write_components_csv(std::ostream& os, const GraphSample& sample, const std::vector<std::string>& header) {
  for (const std::string& h : header) os << "# " << h << '\n';
  os << "# perron_root=" << sample.perron_root << (sample.supercritical ? " supercritical" : " subcritical");
  if (sample.giant >= 0) os << " giant_component_id=" << sample.giant;
  os << '\n';
  const int m = static_cast<int>(sample.type_counts.size());
  os << "component_id,size";
  for (int j = 0; j < m; ++j) os << ",count_" << (j + 1);
  os << '\n';
  for (std::size_t c = 0; c < sample.components.size(); ++c) {
    const auto& v = sample.components[c];
    os << c << ',' << v.sum();
    for (int j = 0; j < m; ++j) os << ',' << v(j);
    os << '\n';
  }
}

}  // namespace progeny
