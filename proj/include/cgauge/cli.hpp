#pragma once

// Command-line front end: config parsing and the subcommand runners.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cgauge/coulomb_gauge.hpp"
#include "cgauge/morrey.hpp"

namespace cgauge {

struct RunConfig {
  std::string subcommand;
  std::string config_path;
  std::string out = "out";

  int N = 64;
  int n = 3;
  std::string generator = "harmonic_map_s2";
  int degree = 1;
  double scale = 1.0;
  /// Halve the harmonic-map scale until the smallness scan passes.
  bool dilate = true;
  double amplitude = 0.5;
  int modes = 4;
  int seed = 1;

  /// Optional input files; empty means "generate from the keys above".
  std::string input;
  std::string omega;
  std::string field;

  std::string mode = "free-boundary";
  GaugeOptions gauge;
  MorreyConfig morrey;
  int threads = 1;
  bool per_ball = false;

  std::string metric = "euclidean";
  std::vector<double> metric_coefficients;

  bool pgm = false;

  /// Throws ConfigError naming the first invalid key.
  void validate() const;
};

/// Applies a flat JSON config document to `base`. Unknown keys and wrongly
/// typed values throw ConfigError.
RunConfig apply_config_json(std::string_view text, RunConfig base = {});

/// Full precedence: defaults, then the --config file, then explicit flags.
/// args excludes the program name. Help requests throw CLI::CallForHelp.
RunConfig parse_args(const std::vector<std::string>& args);

/// The resolved configuration as a flat JSON object (without paths).
std::string config_json(const RunConfig& cfg);

/// Runs a validated config; returns 0 when all clauses pass, 2 otherwise.
/// Operational failures throw.
int run(const RunConfig& cfg, std::ostream& out);

/// Entry point: parse, run, map errors to exit code 1.
int cli_main(int argc, char** argv);

std::string help_text();

}  // namespace cgauge
