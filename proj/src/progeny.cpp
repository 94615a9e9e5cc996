#include "progeny/progeny.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "progeny/errors.hpp"

namespace progeny {

double ProgenyTable::mass_at_size(int size) const {
  if (size < 0 || size > order) return 0.0;
  double s = 0.0;
  for (double v : mixed.block(size)) s += v;
  return s;
}

double ProgenyTable::total_mass() const {
  double s = 0.0;
  for (double v : mixed.coefficients()) s += v;
  return s;
}

namespace {

void check_args(const OffspringModel& model, std::span<const TruncatedSeries> args) {
  if (static_cast<int>(args.size()) != model.types()) throw DomainError("offspring_pgf needs m arguments");
  for (const auto& a : args) {
    if (a.arity() != model.types()) throw DomainError("offspring_pgf argument has the wrong arity");
    args.front().check_shape(a);
  }
}

// Shifts the degree-d block of `src` by e_j into the degree-(d+1) block of `dst`.
void shift_block(const TruncatedSeries& src, int d, int j, TruncatedSeries& dst) {
  const GradedIndex& lay = src.layout();
  if (d + 1 > lay.order()) return;
  std::vector<int> unit(static_cast<std::size_t>(lay.arity()), 0);
  unit[static_cast<std::size_t>(j)] = 1;
  const std::size_t so = lay.offset(d);
  const std::size_t dO = lay.offset(d + 1);
  for (std::size_t i = 0; i < lay.block_size(d); ++i) {
    dst[dO + lay.rank_of_sum(lay.exponent(so + i).data(), unit.data(), d + 1)] = src[so + i];
  }
}

// Monomial products prod_j G_j^{x_j} built as a chain node(x) = node(x - e_j) * G_j,
// where j is the last nonzero coordinate of x.
struct MonomialChain {
  struct Node {
    int parent = -1;
    int var = -1;
    int degree = 0;
  };
  std::vector<Node> nodes;
  std::map<std::vector<int>, int> lookup;

  explicit MonomialChain(int m) {
    nodes.push_back({});
    lookup[std::vector<int>(static_cast<std::size_t>(m), 0)] = 0;
  }

  int ensure(std::vector<int> x) {
    if (auto it = lookup.find(x); it != lookup.end()) return it->second;
    int j = static_cast<int>(x.size()) - 1;
    while (x[static_cast<std::size_t>(j)] == 0) --j;
    std::vector<int> px = x;
    --px[static_cast<std::size_t>(j)];
    const int parent = ensure(px);
    Node n;
    n.parent = parent;
    n.var = j;
    n.degree = nodes[static_cast<std::size_t>(parent)].degree + 1;
    nodes.push_back(n);
    const int id = static_cast<int>(nodes.size()) - 1;
    lookup.emplace(std::move(x), id);
    return id;
  }

  // Node ids sorted so that parents precede children.
  std::vector<int> topological() const {
    std::vector<int> ids(nodes.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
      return nodes[static_cast<std::size_t>(a)].degree < nodes[static_cast<std::size_t>(b)].degree;
    });
    return ids;
  }
};

}  // namespace

TruncatedSeries offspring_pgf(const OffspringModel& model, int k, std::span<const TruncatedSeries> args) {
  check_args(model, args);
  const OffspringDist& dist = model.offspring(k);
  const int m = model.types();
  const auto& layout = args.front().layout_ptr();
  if (dist.is_poisson()) {
    TruncatedSeries lin(layout);
    for (int j = 0; j < m; ++j) {
      const double mu = dist.mu()[j];
      if (mu == 0.0) continue;
      lin += scale(args[static_cast<std::size_t>(j)], mu);
      lin += -mu;
    }
    return exp_series(lin);
  }
  const Eigen::VectorXi mx = dist.max_exponent();
  std::vector<std::vector<TruncatedSeries>> powers(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    auto& pj = powers[static_cast<std::size_t>(j)];
    pj.push_back(TruncatedSeries::constant(m, args.front().order(), 1.0));
    for (int e = 1; e <= mx[j]; ++e) pj.push_back(mul(pj.back(), args[static_cast<std::size_t>(j)]));
  }
  TruncatedSeries out(layout);
  for (const auto& entry : dist.entries()) {
    TruncatedSeries term = powers[0][static_cast<std::size_t>(entry.x[0])];
    for (int j = 1; j < m; ++j) {
      if (entry.x[j] > 0) term = mul(term, powers[static_cast<std::size_t>(j)][static_cast<std::size_t>(entry.x[j])]);
    }
    out += scale(term, entry.mass);
  }
  return out;
}

TruncatedSeries offspring_pgf(const OffspringModel& model, int k, int order) {
  const int m = model.types();
  std::vector<TruncatedSeries> vars;
  for (int j = 0; j < m; ++j) vars.push_back(TruncatedSeries::variable(m, order, j));
  return offspring_pgf(model, k, vars);
}

ProgenyTable make_table(const OffspringModel& model, std::vector<TruncatedSeries> by_root) {
  ProgenyTable t;
  t.order = by_root.front().order();
  t.mixed = TruncatedSeries(by_root.front().layout_ptr());
  for (int i = 0; i < model.types(); ++i) {
    t.mixed += scale(by_root[static_cast<std::size_t>(i)], model.root()[i]);
  }
  t.by_root = std::move(by_root);
  return t;
}

ProgenyTable solve_progeny(const OffspringModel& model, int order, bool underflow_guard) {
  if (order < 1) throw DomainError("solve_progeny needs order >= 1");
  const int m = model.types();
  auto layout = GradedIndex::get(m, order);

  std::vector<TruncatedSeries> g(static_cast<std::size_t>(m), TruncatedSeries(layout));
  std::vector<TruncatedSeries> h(static_cast<std::size_t>(m), TruncatedSeries(layout));
  // Poisson types: h_i = exp(lin_i) with lin_i = sum_j mu_ij (g_j - 1).
  std::vector<TruncatedSeries> lin(static_cast<std::size_t>(m), TruncatedSeries(layout));

  MonomialChain chain(m);
  std::vector<std::vector<std::pair<int, double>>> table_terms(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const OffspringDist& d = model.offspring(i);
    if (!d.is_table()) continue;
    for (const auto& e : d.entries()) {
      table_terms[static_cast<std::size_t>(i)].emplace_back(
          chain.ensure(std::vector<int>(e.x.data(), e.x.data() + e.x.size())), e.mass);
    }
  }
  const std::vector<int> node_order = chain.topological();
  std::vector<TruncatedSeries> node(chain.nodes.size(), TruncatedSeries(layout));
  node[0][0] = 1.0;

  for (int i = 0; i < m; ++i) {
    const OffspringDist& d = model.offspring(i);
    if (d.is_poisson()) {
      lin[static_cast<std::size_t>(i)][0] = -d.mu().sum();
      h[static_cast<std::size_t>(i)][0] = std::exp(-d.mu().sum());
    } else {
      h[static_cast<std::size_t>(i)][0] = d.mass_at_zero();
    }
  }

  for (int deg = 0; deg < order; ++deg) {
    if (deg > 0) {
      // Degree `deg` of every g_j is final here; extend the dependent products.
      for (int id : node_order) {
        if (id == 0) continue;
        const auto& nd = chain.nodes[static_cast<std::size_t>(id)];
        if (nd.degree > deg) continue;
        auto& dst = node[static_cast<std::size_t>(id)];
        const auto& par = node[static_cast<std::size_t>(nd.parent)];
        const auto& gv = g[static_cast<std::size_t>(nd.var)];
        for (int k = 1; k <= deg; ++k) accumulate_block_product(gv, k, par, deg - k, dst);
      }
      for (int i = 0; i < m; ++i) {
        const OffspringDist& d = model.offspring(i);
        auto& hi = h[static_cast<std::size_t>(i)];
        if (d.is_poisson()) {
          auto& li = lin[static_cast<std::size_t>(i)];
          auto lb = li.block(deg);
          for (int j = 0; j < m; ++j) {
            const double mu = d.mu()[j];
            if (mu == 0.0) continue;
            auto gb = g[static_cast<std::size_t>(j)].block(deg);
            for (std::size_t t = 0; t < lb.size(); ++t) lb[t] += mu * gb[t];
          }
          for (int k = 1; k <= deg; ++k) {
            accumulate_block_product(li, k, hi, deg - k, hi, static_cast<double>(k) / deg);
          }
        } else {
          auto hb = hi.block(deg);
          for (const auto& [id, mass] : table_terms[static_cast<std::size_t>(i)]) {
            auto nb = node[static_cast<std::size_t>(id)].block(deg);
            for (std::size_t t = 0; t < hb.size(); ++t) hb[t] += mass * nb[t];
          }
        }
      }
    }
    for (int i = 0; i < m; ++i) shift_block(h[static_cast<std::size_t>(i)], deg, i, g[static_cast<std::size_t>(i)]);
  }

  ProgenyTable table = make_table(model, std::move(g));
  if (underflow_guard) {
    for (const auto& s : table.by_root) {
      for (double v : s.coefficients()) {
        if (v != 0.0 && std::abs(v) < std::numeric_limits<double>::min()) {
          throw NumericError("progeny coefficient underflowed to a subnormal value (" +
                             std::to_string(v) + "); reduce the order");
        }
      }
    }
  }
  return table;
}

std::vector<TruncatedSeries> fixed_point_step(const OffspringModel& model, std::span<const TruncatedSeries> g) {
  std::vector<TruncatedSeries> next;
  next.reserve(g.size());
  for (int i = 0; i < model.types(); ++i) next.push_back(shift(offspring_pgf(model, i, g), i));
  return next;
}

std::vector<TruncatedSeries> iterate_progeny(const OffspringModel& model, int order, int iterations) {
  std::vector<TruncatedSeries> g(static_cast<std::size_t>(model.types()), TruncatedSeries(model.types(), order));
  for (int t = 0; t < iterations; ++t) g = fixed_point_step(model, g);
  return g;
}

TruncatedSeries iid_sum_series(const OffspringModel& model, const Eigen::VectorXi& counts, int order) {
  const int m = model.types();
  if (counts.size() != m || (counts.array() < 0).any()) throw DomainError("counts must be m nonnegative integers");
  TruncatedSeries out = TruncatedSeries::constant(m, order, 1.0);
  for (int k = 0; k < m; ++k) {
    if (counts[k] == 0) continue;
    out = mul(out, pow(offspring_pgf(model, k, order), counts[k]));
  }
  return out;
}

void write_csv(std::ostream& os, const ProgenyTable& table) {
  const int m = table.types();
  for (int j = 0; j < m; ++j) os << "n_" << (j + 1) << ',';
  os << "root_type,probability\n";
  const GradedIndex& lay = table.mixed.layout();
  const auto old_precision = os.precision(17);
  for (std::size_t idx = lay.offset(1); idx < lay.size(); ++idx) {
    std::string prefix;
    for (int v : lay.exponent(idx)) prefix += std::to_string(v) + ',';
    for (int i = 0; i < m; ++i) {
      os << prefix << (i + 1) << ',' << table.by_root[static_cast<std::size_t>(i)][idx] << '\n';
    }
    os << prefix << "mixed," << table.mixed[idx] << '\n';
  }
  os.precision(old_precision);
}

}  // namespace progeny
