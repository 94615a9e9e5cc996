#include <functional>
#include <map>
#include <queue>

#include "progeny/errors.hpp"
#include "progeny/progeny.hpp"

namespace progeny {

namespace {

using Key = std::vector<int>;
using Sparse = std::map<Key, double>;

int degree_of(const Key& k) {
  int d = 0;
  for (int v : k) d += v;
  return d;
}

Sparse convolve(const Sparse& a, const Sparse& b, int max_degree) {
  Sparse out;
  for (const auto& [ka, va] : a) {
    const int da = degree_of(ka);
    for (const auto& [kb, vb] : b) {
      if (da + degree_of(kb) > max_degree) continue;
      Key s = ka;
      for (std::size_t j = 0; j < s.size(); ++j) s[j] += kb[j];
      out[s] += va * vb;
    }
  }
  return out;
}

void check_inversion_input(const OffspringModel& model, const Eigen::VectorXi& n, int budget) {
  if (n.size() != model.types()) throw DomainError("n has the wrong dimension");
  if ((n.array() < 0).any()) throw DomainError("n must be nonnegative");
  if (n.sum() < 1) throw DomainError("n must be nonzero");
  if (n.sum() > budget) {
    throw DomainError("|n| = " + std::to_string(n.sum()) + " exceeds the oracle budget of " +
                      std::to_string(budget));
  }
}

// Laplace expansion along the first remaining row.
TruncatedSeries cofactor_det(const std::vector<std::vector<TruncatedSeries>>& k, std::vector<int> rows,
                             std::vector<int> cols) {
  if (rows.size() == 1) return k[static_cast<std::size_t>(rows[0])][static_cast<std::size_t>(cols[0])];
  const int r = rows.front();
  std::vector<int> sub_rows(rows.begin() + 1, rows.end());
  TruncatedSeries det(k[0][0].layout_ptr());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    std::vector<int> sub_cols = cols;
    sub_cols.erase(sub_cols.begin() + static_cast<std::ptrdiff_t>(c));
    TruncatedSeries term =
        mul(k[static_cast<std::size_t>(r)][static_cast<std::size_t>(cols[c])], cofactor_det(k, sub_rows, sub_cols));
    if (c % 2 == 0) {
      det += term;
    } else {
      det -= term;
    }
  }
  return det;
}

double tree_term(const OffspringModel& model, const Eigen::VectorXi& n, const std::vector<int>& parent) {
  const int m = model.types();
  const int order = n.sum();
  std::vector<TruncatedSeries> f;
  TruncatedSeries root_fn(m, order);
  for (int k = 0; k < m; ++k) root_fn += scale(TruncatedSeries::variable(m, order, k), model.root()[k]);
  f.push_back(std::move(root_fn));
  for (int j = 0; j < m; ++j) f.push_back(pow(offspring_pgf(model, j, order), n[j]));

  // Vertex v >= 1 carries variable r_v; each function is differentiated once per in-edge.
  for (int v = 1; v <= m; ++v) {
    auto& target = f[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
    target = diff(target, v - 1);
  }
  TruncatedSeries prod = f[0];
  for (int v = 1; v <= m; ++v) prod = mul(prod, f[static_cast<std::size_t>(v)]);
  Eigen::VectorXi target = n - Eigen::VectorXi::Ones(m);
  return prod.coeff(target);
}

void check_arborescent_input(const OffspringModel& model, const Eigen::VectorXi& n, int budget) {
  check_inversion_input(model, n, budget);
  if ((n.array() < 1).any()) {
    throw DomainError("arborescent inversion needs n_i >= 1 for every type (it divides by prod n_i)");
  }
}

}  // namespace

ProgenyTable recursion_oracle(const OffspringModel& model, int order) {
  if (!model.all_table()) throw DomainError("recursion_oracle needs Table laws (convert Poisson laws first)");
  if (order < 1) throw DomainError("recursion_oracle needs order >= 1");
  const int m = model.types();
  std::vector<int> max_exp(static_cast<std::size_t>(m), 0);
  for (const auto& d : model.offspring()) {
    for (const auto& e : d.entries()) {
      for (int j = 0; j < m; ++j) max_exp[static_cast<std::size_t>(j)] = std::max(max_exp[static_cast<std::size_t>(j)], e.x[j]);
    }
  }
  std::vector<Sparse> q(static_cast<std::size_t>(m));
  const Key zero(static_cast<std::size_t>(m), 0);

  for (int d = 1; d <= order; ++d) {
    // Convolution powers of the laws found so far, needed only up to degree d - 1.
    std::vector<std::vector<Sparse>> powers(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      auto& pj = powers[static_cast<std::size_t>(j)];
      pj.push_back(Sparse{{zero, 1.0}});
      for (int e = 1; e <= max_exp[static_cast<std::size_t>(j)]; ++e) {
        pj.push_back(convolve(pj.back(), q[static_cast<std::size_t>(j)], d - 1));
      }
    }
    std::map<Key, Sparse> sums;
    std::vector<Sparse> fresh(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      for (const auto& e : model.offspring(i).entries()) {
        Key x(e.x.data(), e.x.data() + e.x.size());
        auto it = sums.find(x);
        if (it == sums.end()) {
          Sparse s{{zero, 1.0}};
          for (int j = 0; j < m; ++j) {
            if (x[static_cast<std::size_t>(j)] > 0) {
              s = convolve(s, powers[static_cast<std::size_t>(j)][static_cast<std::size_t>(x[static_cast<std::size_t>(j)])], d - 1);
            }
          }
          it = sums.emplace(x, std::move(s)).first;
        }
        for (const auto& [r, v] : it->second) {
          if (degree_of(r) != d - 1) continue;
          Key n = r;
          ++n[static_cast<std::size_t>(i)];
          fresh[static_cast<std::size_t>(i)][n] += e.mass * v;
        }
      }
    }
    for (int i = 0; i < m; ++i) {
      for (auto& [k, v] : fresh[static_cast<std::size_t>(i)]) q[static_cast<std::size_t>(i)][k] += v;
    }
  }

  std::vector<TruncatedSeries> by_root;
  for (int i = 0; i < m; ++i) {
    TruncatedSeries s(m, order);
    for (const auto& [k, v] : q[static_cast<std::size_t>(i)]) {
      s.set(Eigen::Map<const Eigen::VectorXi>(k.data(), m), v);
    }
    by_root.push_back(std::move(s));
  }
  return make_table(model, std::move(by_root));
}

double lagrange_good_oracle(const OffspringModel& model, const Eigen::VectorXi& n, int budget) {
  check_inversion_input(model, n, budget);
  const int m = model.types();
  if (m > 4) throw DomainError("lagrange_good_oracle supports at most 4 types");
  const int order = n.sum();
  std::vector<TruncatedSeries> g;
  for (int i = 0; i < m; ++i) g.push_back(offspring_pgf(model, i, order));

  std::vector<std::vector<TruncatedSeries>> k(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const TruncatedSeries ginv = inv(g[static_cast<std::size_t>(i)]);
    for (int j = 0; j < m; ++j) {
      TruncatedSeries entry = shift(mul(ginv, diff(g[static_cast<std::size_t>(i)], j)), i);
      entry *= -1.0;
      if (i == j) entry += 1.0;
      k[static_cast<std::size_t>(i)].push_back(std::move(entry));
    }
  }
  std::vector<int> idx(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
  TruncatedSeries prod = cofactor_det(k, idx, idx);
  for (int i = 0; i < m; ++i) {
    if (n[i] > 0) prod = mul(prod, pow(g[static_cast<std::size_t>(i)], n[i]));
  }
  double p = 0.0;
  for (int kk = 0; kk < m; ++kk) {
    if (n[kk] == 0) continue;
    Eigen::VectorXi target = n;
    --target[kk];
    p += model.root()[kk] * prod.coeff(target);
  }
  return p;
}

std::vector<std::vector<int>> rooted_trees(int m) {
  if (m < 1) throw DomainError("rooted_trees needs m >= 1");
  const int vertices = m + 1;
  const int len = vertices - 2;
  std::vector<std::vector<int>> trees;
  std::vector<int> seq(static_cast<std::size_t>(std::max(len, 0)), 0);
  while (true) {
    // Pruefer decoding into an undirected edge list.
    std::vector<int> deg(static_cast<std::size_t>(vertices), 1);
    for (int a : seq) ++deg[static_cast<std::size_t>(a)];
    std::vector<std::pair<int, int>> edges;
    for (int a : seq) {
      int leaf = 0;
      while (deg[static_cast<std::size_t>(leaf)] != 1) ++leaf;
      edges.emplace_back(leaf, a);
      --deg[static_cast<std::size_t>(leaf)];
      --deg[static_cast<std::size_t>(a)];
    }
    int u = -1;
    int w = -1;
    for (int v = 0; v < vertices; ++v) {
      if (deg[static_cast<std::size_t>(v)] == 1) (u < 0 ? u : w) = v;
    }
    edges.emplace_back(u, w);

    // Orient toward 0.
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(vertices));
    for (auto [a, b] : edges) {
      adj[static_cast<std::size_t>(a)].push_back(b);
      adj[static_cast<std::size_t>(b)].push_back(a);
    }
    std::vector<int> parent(static_cast<std::size_t>(vertices), -2);
    parent[0] = -1;
    std::queue<int> bfs;
    bfs.push(0);
    while (!bfs.empty()) {
      const int v = bfs.front();
      bfs.pop();
      for (int nb : adj[static_cast<std::size_t>(v)]) {
        if (parent[static_cast<std::size_t>(nb)] == -2) {
          parent[static_cast<std::size_t>(nb)] = v;
          bfs.push(nb);
        }
      }
    }
    trees.push_back(std::move(parent));

    int pos = 0;
    while (pos < len && ++seq[static_cast<std::size_t>(pos)] == vertices) {
      seq[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    if (pos >= len) break;
  }
  return trees;
}

double arborescent_oracle(const OffspringModel& model, const Eigen::VectorXi& n, int budget) {
  check_arborescent_input(model, n, budget);
  if (model.types() > 3) throw DomainError("arborescent_oracle supports at most 3 types");
  double total = 0.0;
  for (const auto& tree : rooted_trees(model.types())) total += tree_term(model, n, tree);
  return total / n.cast<double>().prod();
}

double path_tree_term(const OffspringModel& model, const Eigen::VectorXi& n, int budget) {
  check_arborescent_input(model, n, budget);
  std::vector<int> parent(static_cast<std::size_t>(model.types()) + 1);
  parent[0] = -1;
  for (int v = 1; v <= model.types(); ++v) parent[static_cast<std::size_t>(v)] = v - 1;
  return tree_term(model, n, parent) / n.cast<double>().prod();
}

}  // namespace progeny
