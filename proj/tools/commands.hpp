#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace progeny::cli {

/// Provenance block embedded in every output.
struct RunManifest {
  RunManifest(std::string command_name, std::string input, std::optional<std::uint64_t> run_seed = std::nullopt)
      : command(std::move(command_name)), input_path(std::move(input)), seed(run_seed) {}

  std::string command;
  std::string input_path;
  nlohmann::json parameters = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
  std::string version = PROGENY_VERSION;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  nlohmann::json to_json() const;
};

/// out: the primary artifact (CSV or JSON); report: the secondary summary.
struct Streams {
  std::ostream& out;
  std::ostream& report;
};

struct ValidateArgs {
  std::string model;
};

struct ExactArgs {
  std::string model;
  int nmax = 20;
  std::string oracle = "none";
};

struct GammaArgs {
  std::string model;
  std::vector<double> rho;
  int grid = 0;
};

struct RhoStarArgs {
  std::string model;
  bool check_eigenvector = false;
};

struct ConvergeArgs {
  std::string model;
  std::vector<double> rho;
  int nmax = 200;
};

struct SimulateArgs {
  std::string model;
  std::uint64_t samples = 10000;
  std::uint64_t cap = 1000;
  std::uint64_t seed = 0;
  /// "" (no tilt), "auto", or a comma-separated lambda.
  std::string tilt;
  unsigned threads = 0;
  int max_size = 20;
  std::optional<std::pair<long, long>> window;
};

struct GraphDemoArgs {
  std::string spec;
  std::uint64_t seed = 0;
  int min_size = 20;
  int max_size = 6;
};

// Each command returns its exit code. Errors surface as exceptions:
// ParseError -> 1, DomainError -> 2, NumericError -> 3 (see exit_code_for).
int cmd_validate(const ValidateArgs& opt, Streams io);
int cmd_exact(const ExactArgs& opt, Streams io);
int cmd_gamma(const GammaArgs& opt, Streams io);
int cmd_rhostar(const RhoStarArgs& opt, Streams io);
int cmd_converge(const ConvergeArgs& opt, Streams io);
int cmd_simulate(const SimulateArgs& opt, Streams io);
int cmd_graphdemo(const GraphDemoArgs& opt, Streams io);

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// "0.5,0.5" -> {0.5, 0.5}. Throws ParseError.
std::vector<double> parse_list(const std::string& text);

}  // namespace progeny::cli
