#pragma once

// End-to-end run: gauge, transformed equation, Hodge split of P^T grad u,
// decay experiment, and one verdict per clause.

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "cgauge/coulomb_gauge.hpp"
#include "cgauge/hodge.hpp"
#include "cgauge/morrey.hpp"
#include "cgauge/problem.hpp"

namespace cgauge {

inline constexpr int kReportVersion = 1;

/// Weak residual of div(P^T grad u) = -Omega^P . P^T grad u against the test
/// bumps, sqrt of the sum of squares over bumps and rows. With P = I it equals
/// equation_residual(u, Omega).
double transformed_equation_residual(const RotationField& P, std::span<const ScalarField> u,
                                     const SkewPotential& omega);

enum class ClauseStatus { Pass, Fail, NotApplicable };
std::string to_string(ClauseStatus s);

struct Clause {
  std::string name;
  ClauseStatus status;
  double value;
  double threshold;
  std::string detail;
};

struct HodgeRowSummary {
  double input_norm;
  double f_norm;  ///< ||grad f||
  double g_norm;  ///< ||grad g||
  double h_norm;
  double reconstruction_residual;
  double div_residual;
  double curl_residual;
};

/// Hodge terms from a gauge computed on the square circumscribing B_2R(z).
struct PerBallEntry {
  Vec2 center;
  double R;
  int iterations;
  bool converged;
  double f_term;
  double g_term;
  double global_f_term;
  double global_g_term;
};

struct PipelineOptions {
  GaugeOptions gauge;
  MorreyConfig morrey;
  bool per_ball = false;
};

struct PipelineReport {
  std::string generator;
  int degree = 0;
  double scale = 1.0;
  int N = 0;
  int n = 0;
  double equation_residual = 0.0;
  GaugeResult gauge;
  double transformed_residual = 0.0;
  double transformed_tolerance = 0.0;
  std::vector<HodgeRowSummary> hodge = {};
  DecayReport decay = {};
  std::vector<PerBallEntry> per_ball = {};
  std::vector<Clause> clauses = {};

  bool all_passed() const;
  const Clause* clause(const std::string& name) const;
};

/// gauge_energy_bound, a_priori_estimates and conservation_law for a gauge run.
std::vector<Clause> gauge_clauses(const GaugeResult& gauge, int n);
/// smallness and decay (not-applicable when smallness fails).
std::vector<Clause> decay_clauses(const DecayReport& decay, const MorreyConfig& cfg);

/// Tolerance constant C in transformed residual <= C h^2 (1 + ||Omega||_inf) ||grad u||.
inline constexpr double kTransformedConstant = 1.0;

PipelineReport run_pipeline(const ProblemInstance& problem, const PipelineOptions& opts = {});

/// Deterministic JSON (no timestamps, fixed key order).
std::string report_json(const PipelineReport& report);
/// JSON fragments shared by the report and the CLI.
nlohmann::ordered_json to_json(const GaugeResult& gauge);
nlohmann::ordered_json to_json(const DecayReport& decay);
nlohmann::ordered_json to_json(const std::vector<Clause>& clauses);

/// Short human-readable summary, one line per clause.
std::string report_summary(const PipelineReport& report);

}  // namespace cgauge
