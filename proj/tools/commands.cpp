#include "commands.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "progeny/errors.hpp"
#include "progeny/graph.hpp"
#include "progeny/model.hpp"
#include "progeny/model_io.hpp"
#include "progeny/progeny.hpp"
#include "progeny/rate.hpp"
#include "progeny/simulate.hpp"

namespace progeny::cli {

using nlohmann::json;

namespace {

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
json to_json(const Eigen::VectorXi& v) { return std::vector<int>(v.data(), v.data() + v.size()); }

json violations_json(const std::vector<Violation>& vs) {
  json out = json::array();
  for (const Violation& v : vs) {
    out.push_back({{"field", v.field},
                   {"message", v.message},
                   {"severity", v.severity == Violation::Severity::Error ? "error" : "warning"}});
  }
  return out;
}

OffspringModel load_valid(const std::string& path) {
  OffspringModel model = load_model(path);
  const auto vs = validate(model);
  for (const Violation& v : vs) {
    if (v.severity == Violation::Severity::Error) throw DomainError("invalid model: " + v.field + ": " + v.message);
  }
  return model;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd direction(const OffspringModel& model, const std::vector<double>& rho) {
  if (static_cast<int>(rho.size()) != model.types()) {
    throw DomainError("--rho needs " + std::to_string(model.types()) + " entries, got " + std::to_string(rho.size()));
  }
  return to_vector(rho);
}

void manifest_line(std::ostream& os, const RunManifest& m) { os << "# manifest: " << m.to_json().dump() << '\n'; }

std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

// Every interior composition c / k with c_i >= 1, in lexicographic order.
void grid_points(int m, int k, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  const int used = [&] {
    int s = 0;
    for (int c : cur) s += c;
    return s;
  }();
  const int left = m - static_cast<int>(cur.size());
  if (left == 1) {
    cur.push_back(k - used);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int c = 1; used + c + (left - 1) <= k; ++c) {
    cur.push_back(c);
    grid_points(m, k, cur, out);
    cur.pop_back();
  }
}

struct OracleDiff {
  long long points = 0;
  double max_abs = 0.0;
  double max_rel = 0.0;
  int compared_up_to = 0;

  void add(double exact, double other) {
    ++points;
    const double d = std::abs(exact - other);
    max_abs = std::max(max_abs, d);
    const double scale = std::max(std::abs(exact), std::abs(other));
    if (scale > 0.0) max_rel = std::max(max_rel, d / scale);
  }
  json to_json() const {
    return {{"status", "ok"},
            {"points", points},
            {"compared_up_to", compared_up_to},
            {"max_abs_diff", max_abs},
            {"max_rel_diff", max_rel}};
  }
};

}  // namespace

json RunManifest::to_json() const {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json j = {{"command", command}, {"input", input_path}, {"parameters", parameters}, {"version", version},
            {"wall_time_s", wall}};
  j["seed"] = seed ? json(*seed) : json(nullptr);
  return j;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ParseError("not a number: '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) throw ParseError("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("empty list");
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return 1;
  if (dynamic_cast<const DomainError*>(&e)) return 2;
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  return 3;
}

int cmd_validate(const ValidateArgs& opt, Streams io) {
  RunManifest man("validate", opt.model);
  const OffspringModel model = load_model(opt.model);
  const auto vs = validate(model);
  json rep = {{"valid", !has_errors(vs)}, {"types", model.types()}, {"violations", violations_json(vs)}};
  if (!has_errors(vs)) {
    const Eigen::MatrixXd a = mean_matrix(model);
    rep["perron_root"] = perron_root(a);
    rep["criticality"] = to_string(classify(model));
  }
  rep["manifest"] = man.to_json();
  io.out << rep.dump(2) << '\n';
  return has_errors(vs) ? 2 : 0;
}

int cmd_exact(const ExactArgs& opt, Streams io) {
  RunManifest man("exact", opt.model);
  man.parameters = {{"nmax", opt.nmax}, {"oracle", opt.oracle}};
  if (opt.nmax < 1) throw DomainError("--nmax must be at least 1");
  const bool all = opt.oracle == "all";
  if (!all && opt.oracle != "none" && opt.oracle != "recursion" && opt.oracle != "lagrange" &&
      opt.oracle != "arborescent") {
    throw ParseError("unknown oracle '" + opt.oracle + "'");
  }
  const OffspringModel model = load_valid(opt.model);
  const ProgenyTable table = solve_progeny(model, opt.nmax);
  const int m = model.types();

  json oracles = json::object();
  auto run = [&](const std::string& name, auto&& body) {
    if (!all && opt.oracle != name) return;
    try {
      oracles[name] = body();
    } catch (const DomainError& e) {
      if (!all) throw;
      oracles[name] = {{"status", "unsupported"}, {"reason", e.what()}};
    }
  };
  const auto& layout = table.mixed;
  run("recursion", [&] {
    const ProgenyTable rec = recursion_oracle(model, opt.nmax);
    OracleDiff d;
    d.compared_up_to = opt.nmax;
    for (std::size_t idx = 1; idx < layout.size(); ++idx) {
      for (int i = 0; i < m; ++i) d.add(table.by_root[static_cast<std::size_t>(i)][idx], rec.by_root[static_cast<std::size_t>(i)][idx]);
      d.add(table.mixed[idx], rec.mixed[idx]);
    }
    return d.to_json();
  });
  auto inversion = [&](auto&& oracle, bool positive_only) {
    OracleDiff d;
    d.compared_up_to = std::min(opt.nmax, kOracleBudget);
    const auto& index = layout.layout();
    for (std::size_t idx = 1; idx < index.offset(d.compared_up_to + 1); ++idx) {
      const auto e = index.exponent(idx);
      Eigen::VectorXi n = Eigen::Map<const Eigen::VectorXi>(e.data(), m);
      if (positive_only && n.minCoeff() < 1) continue;
      d.add(table.at(n), oracle(model, n, kOracleBudget));
    }
    return d.to_json();
  };
  run("lagrange", [&] { return inversion(lagrange_good_oracle, false); });
  run("arborescent", [&] { return inversion(arborescent_oracle, true); });

  manifest_line(io.out, man);
  write_csv(io.out, table);
  if (opt.oracle != "none") {
    json rep = {{"oracles", oracles}, {"manifest", man.to_json()}};
    io.report << rep.dump(2) << '\n';
  }
  return 0;
}

int cmd_gamma(const GammaArgs& opt, Streams io) {
  RunManifest man("gamma", opt.model);
  const OffspringModel model = load_valid(opt.model);
  const int m = model.types();
  if (opt.rho.empty() == (opt.grid == 0)) throw ParseError("give exactly one of --rho and --grid");

  std::vector<Eigen::VectorXd> points;
  if (!opt.rho.empty()) {
    man.parameters["rho"] = opt.rho;
    points.push_back(direction(model, opt.rho));
  } else {
    man.parameters["grid"] = opt.grid;
    if (opt.grid < m) throw DomainError("--grid must be at least the number of types");
    std::vector<std::vector<int>> comps;
    std::vector<int> cur;
    grid_points(m, opt.grid, cur, comps);
    for (const auto& c : comps) {
      Eigen::VectorXd r(m);
      for (int j = 0; j < m; ++j) r(j) = static_cast<double>(c[static_cast<std::size_t>(j)]) / opt.grid;
      points.push_back(r);
    }
  }

  std::ostringstream body;
  for (int j = 0; j < m; ++j) body << "rho_" << j + 1 << ',';
  body << "gamma,";
  for (int j = 0; j < m; ++j) body << "lambda_" << j + 1 << ',';
  body << "grad_residual,iterations,status\n";
  for (const Eigen::VectorXd& r : points) {
    for (int j = 0; j < m; ++j) body << fmt(r(j)) << ',';
    try {
      const RateResult res = gamma(model, r);
      body << fmt(res.gamma) << ',';
      for (int j = 0; j < m; ++j) body << fmt(res.lambda_star(j)) << ',';
      body << fmt(res.grad_residual) << ',' << res.iterations << ",ok\n";
    } catch (const NumericError&) {
      // A single direction aborts the command; a grid records the point and moves on.
      if (!opt.rho.empty()) throw;
      body << "inf,";
      for (int j = 0; j < m; ++j) body << "nan,";
      body << "nan,0,diverged\n";
    }
  }
  manifest_line(io.out, man);
  io.out << body.str();
  return 0;
}

int cmd_rhostar(const RhoStarArgs& opt, Streams io) {
  RunManifest man("rhostar", opt.model);
  man.parameters = {{"check_eigenvector", opt.check_eigenvector}};
  const OffspringModel model = load_valid(opt.model);
  json rep;
  if (opt.check_eigenvector) {
    const EigenvectorCheck chk = principal_eigenvector_check(model);
    rep["eigenvector_check"] = {{"left_perron_vector", to_json(chk.eigenvector)},
                                {"rho_star", to_json(chk.rho_star)},
                                {"l1_distance", chk.l1_distance},
                                {"reducible", chk.reducible},
                                {"power_iterations", chk.iterations}};
  }
  const RhoStarResult res = rho_star(model);
  rep["rho_star"] = to_json(res.rho);
  rep["gamma"] = res.gamma;
  rep["lambda_star"] = to_json(res.lambda_star);
  rep["disagreement"] = res.disagreement;
  json runs = json::array();
  for (const RhoStarRun& r : res.runs) {
    runs.push_back({{"start", to_json(r.start)},
                    {"rho", to_json(r.rho)},
                    {"gamma", r.gamma},
                    {"projected_gradient", r.projected_gradient},
                    {"iterations", r.iterations},
                    {"converged", r.converged}});
  }
  rep["runs"] = runs;
  rep["manifest"] = man.to_json();
  io.out << rep.dump(2) << '\n';
  return 0;
}

int cmd_converge(const ConvergeArgs& opt, Streams io) {
  RunManifest man("converge", opt.model);
  man.parameters = {{"rho", opt.rho}, {"nmax", opt.nmax}};
  const OffspringModel model = load_valid(opt.model);
  const int m = model.types();
  const Eigen::VectorXd rho = direction(model, opt.rho);
  if (opt.nmax < 1) throw DomainError("--nmax must be at least 1");
  const RateResult rate = gamma(model, rho);
  const double neg_gamma = -rate.gamma;
  const ProgenyTable table = solve_progeny(model, opt.nmax);

  std::vector<double> log_p(static_cast<std::size_t>(opt.nmax) + 1, -std::numeric_limits<double>::infinity());
  std::ostringstream body;
  body << "size,";
  for (int j = 0; j < m; ++j) body << "n_" << j + 1 << ',';
  body << "log_p_over_size,neg_gamma,slope,gap\n";
  for (int s = 1; s <= opt.nmax; ++s) {
    const Eigen::VectorXi n = ray(rho, s);
    const double p = table.at(n);
    log_p[static_cast<std::size_t>(s)] = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    body << s << ',';
    for (int j = 0; j < m; ++j) body << n(j) << ',';
    body << fmt(log_p[static_cast<std::size_t>(s)] / s) << ',' << fmt(neg_gamma) << ',';
    // Difference quotient against size s / 2; polynomial prefactors largely cancel.
    if (s % 2 == 0 && std::isfinite(log_p[static_cast<std::size_t>(s)]) &&
        std::isfinite(log_p[static_cast<std::size_t>(s / 2)])) {
      const double slope = (log_p[static_cast<std::size_t>(s)] - log_p[static_cast<std::size_t>(s / 2)]) / (s - s / 2);
      body << fmt(slope) << ',' << fmt(std::abs(slope - neg_gamma)) << '\n';
    } else {
      body << ",\n";
    }
  }
  manifest_line(io.out, man);
  io.out << body.str();
  return 0;
}

int cmd_simulate(const SimulateArgs& opt, Streams io) {
  RunManifest man("simulate", opt.model, opt.seed);
  man.parameters = {{"samples", opt.samples}, {"cap", opt.cap}, {"tilt", opt.tilt}, {"max_size", opt.max_size}};
  if (opt.window) man.parameters["window"] = {opt.window->first, opt.window->second};
  const OffspringModel model = load_valid(opt.model);
  SimConfig cfg;
  cfg.samples = opt.samples;
  cfg.cap = opt.cap;
  cfg.seed = opt.seed;
  cfg.threads = opt.threads;
  if (opt.tilt == "auto") {
    cfg.tilt_lambda = rho_star(model).lambda_star;
  } else if (!opt.tilt.empty()) {
    cfg.tilt_lambda = to_vector(parse_list(opt.tilt));
  }
  const SimBatch batch = sample(model, cfg);

  std::size_t censored = 0;
  for (const SimRecord& r : batch.records) censored += r.censored ? 1 : 0;
  const int smax = static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(std::max(opt.max_size, 1)), opt.cap));
  const ProgenyTable exact = solve_progeny(model, smax, false);
  json sizes = json::array();
  for (int s = 1; s <= smax; ++s) {
    const Estimate e = estimate_size_window(batch, s, s);
    sizes.push_back({{"size", s},
                     {"estimate", e.value},
                     {"stderr", e.std_error},
                     {"hits", e.hits},
                     {"effective_sample_size", e.effective_sample_size},
                     {"exact", exact.mass_at_size(s)}});
  }
  json rep = {{"samples", batch.records.size()},
              {"censored", censored},
              {"censored_fraction", static_cast<double>(censored) / static_cast<double>(batch.records.size())},
              {"size_estimates", sizes}};
  rep["tilt_lambda"] = cfg.tilt_lambda ? to_json(*cfg.tilt_lambda) : json(nullptr);
  if (opt.window) {
    const auto [lo, hi] = *opt.window;
    const Estimate e = estimate_size_window(batch, lo, hi);
    json w = {{"lo", lo}, {"hi", hi}, {"mass", e.value}, {"stderr", e.std_error}, {"hits", e.hits},
              {"effective_sample_size", e.effective_sample_size}};
    const auto comp = composition_stats(batch, lo, hi);
    w["composition"] = comp ? json{{"mean", to_json(comp->mean)}, {"records", comp->count}} : json("no-data");
    rep["window"] = w;
  }
  rep["manifest"] = man.to_json();

  write_csv(io.out, batch, {"manifest: " + man.to_json().dump()});
  io.report << rep.dump(2) << '\n';
  return 0;
}

int cmd_graphdemo(const GraphDemoArgs& opt, Streams io) {
  RunManifest man("graphdemo", opt.spec, opt.seed);
  man.parameters = {{"min_size", opt.min_size}, {"max_size", opt.max_size}};
  const KernelGraphSpec spec = load_graph_spec(opt.spec);
  const auto vs = validate(spec);
  if (has_errors(vs)) throw DomainError("invalid graph spec: " + vs.front().field + ": " + vs.front().message);
  const GraphSample g = sample_components(spec, opt.seed);

  json rep = {{"n", spec.n},
              {"edges", g.edges},
              {"components", g.components.size()},
              {"type_counts", to_json(g.type_counts)},
              {"perron_root", g.perron_root},
              {"supercritical", g.supercritical}};
  if (g.giant >= 0) {
    rep["giant_component"] = {{"component_id", g.giant},
                              {"size", g.components[static_cast<std::size_t>(g.giant)].sum()}};
  } else {
    // The branching comparison only makes sense below criticality.
    const GraphComparison cmp = compare_with_branching(spec, g, opt.max_size, opt.min_size);
    json sizes = json::array();
    for (const SizeComparison& s : cmp.sizes) {
      sizes.push_back({{"size", s.size},
                       {"components", s.components},
                       {"vertex_fraction", s.empirical},
                       {"predicted", s.predicted},
                       {"sigma", s.sigma},
                       {"z", s.z}});
    }
    rep["size_comparison"] = sizes;
    rep["rho_star"] = to_json(cmp.rho_star);
    json comp = {{"min_size", cmp.min_size}, {"components", cmp.large_components}};
    if (cmp.large_components > 0) {
      comp["mean"] = to_json(cmp.mean_composition);
      comp["l1_distance_to_rho_star"] = cmp.l1_distance;
    } else {
      comp["mean"] = "no-data";
    }
    rep["composition"] = comp;
  }
  rep["manifest"] = man.to_json();

  write_components_csv(io.out, g, {"manifest: " + man.to_json().dump()});
  io.report << rep.dump(2) << '\n';
  return 0;
}

}  // namespace progeny::cli
