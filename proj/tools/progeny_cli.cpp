#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "commands.hpp"
#include "progeny/errors.hpp"

namespace {

using namespace progeny::cli;

// Opens `path` for writing, or falls back to `fallback` when empty.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw progeny::ParseError("cannot open " + path + " for writing");
    stream_ = file_.get();
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Total progeny of multi-type branching processes: exact laws, rate functions, simulation"};
  app.set_version_flag("--version", PROGENY_VERSION);
  app.require_subcommand(1);

  std::string out_path;
  std::string report_path;
  auto add_io = [&](CLI::App* sub, bool has_report) {
    sub->add_option("--out", out_path, "Write the primary output here instead of stdout");
    if (has_report) sub->add_option("--report", report_path, "Write the summary here instead of stderr");
  };

  ValidateArgs validate_args;
  auto* validate = app.add_subcommand("validate", "Check a model file and report every violation");
  validate->add_option("model", validate_args.model, "Model JSON")->required()->check(CLI::ExistingFile);
  add_io(validate, false);

  ExactArgs exact_args;
  auto* exact = app.add_subcommand("exact", "Exact P(T = n) for |n| <= nmax as CSV");
  exact->add_option("model", exact_args.model, "Model JSON")->required()->check(CLI::ExistingFile);
  exact->add_option("--nmax", exact_args.nmax, "Largest total size")->check(CLI::PositiveNumber);
  exact->add_option("--oracle", exact_args.oracle, "Cross-check against an independent method")
      ->check(CLI::IsMember({"none", "recursion", "lagrange", "arborescent", "all"}));
  add_io(exact, true);

  GammaArgs gamma_args;
  std::string gamma_rho;
  auto* gamma = app.add_subcommand("gamma", "Rate function at one direction or on a simplex grid");
  gamma->add_option("model", gamma_args.model, "Model JSON")->required()->check(CLI::ExistingFile);
  auto* rho_opt = gamma->add_option("--rho", gamma_rho, "Comma-separated direction r1,...,rm");
  gamma->add_option("--grid", gamma_args.grid, "Interior grid with spacing 1/k")->excludes(rho_opt);
  add_io(gamma, false);

  RhoStarArgs rhostar_args;
  auto* rhostar = app.add_subcommand("rhostar", "Minimizer of the rate function over the simplex");
  rhostar->add_option("model", rhostar_args.model, "Model JSON")->required()->check(CLI::ExistingFile);
  rhostar->add_flag("--check-eigenvector", rhostar_args.check_eigenvector,
                    "Compare with the left Perron vector of a right-stochastic mean matrix");
  add_io(rhostar, false);

  ConvergeArgs converge_args;
  std::string converge_rho;
  auto* converge = app.add_subcommand("converge", "(1/|n|) log P(T = n) along a ray against -Gamma");
  converge->add_option("model", converge_args.model, "Model JSON")->required()->check(CLI::ExistingFile);
  converge->add_option("--rho", converge_rho, "Comma-separated direction r1,...,rm")->required();
  converge->add_option("--nmax", converge_args.nmax, "Largest total size")->check(CLI::PositiveNumber);
  add_io(converge, false);

  SimulateArgs simulate_args;
  std::vector<long> window;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo samples of T, optionally exponentially tilted");
  simulate->add_option("model", simulate_args.model, "Model JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--samples", simulate_args.samples, "Number of trees")->check(CLI::PositiveNumber);
  simulate->add_option("--cap", simulate_args.cap, "Censor trees larger than this")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", simulate_args.seed, "64-bit seed");
  simulate->add_option("--tilt", simulate_args.tilt, "'auto' or a comma-separated lambda");
  simulate->add_option("--threads", simulate_args.threads, "Worker threads (0: all cores)");
  simulate->add_option("--max-size", simulate_args.max_size, "Report size estimates up to this size");
  simulate->add_option("--window", window, "Size window lo hi for the composition estimate")->expected(2);
  add_io(simulate, true);

  GraphDemoArgs graph_args;
  auto* graphdemo = app.add_subcommand("graphdemo", "Components of an inhomogeneous random graph");
  graphdemo->add_option("spec", graph_args.spec, "Graph spec JSON")->required()->check(CLI::ExistingFile);
  graphdemo->add_option("--seed", graph_args.seed, "64-bit seed");
  graphdemo->add_option("--min-size", graph_args.min_size, "Smallest component size in the composition average")
      ->check(CLI::PositiveNumber);
  graphdemo->add_option("--max-size", graph_args.max_size, "Compare size frequencies up to this size")
      ->check(CLI::PositiveNumber);
  add_io(graphdemo, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    Sink out(out_path, std::cout);
    Sink report(report_path, std::cerr);
    Streams io{out.get(), report.get()};
    if (*validate) return cmd_validate(validate_args, io);
    if (*exact) return cmd_exact(exact_args, io);
    if (*gamma) {
      if (!gamma_rho.empty()) gamma_args.rho = parse_list(gamma_rho);
      return cmd_gamma(gamma_args, io);
    }
    if (*rhostar) return cmd_rhostar(rhostar_args, io);
    if (*converge) {
      converge_args.rho = parse_list(converge_rho);
      return cmd_converge(converge_args, io);
    }
    if (*simulate) {
      if (!window.empty()) simulate_args.window = std::make_pair(window[0], window[1]);
      return cmd_simulate(simulate_args, io);
    }
    if (*graphdemo) return cmd_graphdemo(graph_args, io);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    const int code = exit_code_for(e);
    if (code == 1) std::cerr << '\n' << app.help();
    return code;
  }
  return 0;
}
