#include "cgauge/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <type_traits>

#include "cgauge/errors.hpp"
#include "cgauge/field_io.hpp"
#include "cgauge/frame.hpp"
#include "cgauge/hodge.hpp"
#include "cgauge/pipeline.hpp"
#include "cgauge/problem.hpp"

namespace cgauge {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

const std::vector<std::string> kSubcommands{"generate", "gauge", "hodge", "decay", "frame", "pipeline"};
const std::vector<std::string> kGenerators{"harmonic_map_s2", "harmonic", "random"};
const std::vector<std::string> kMetrics{"euclidean", "conformal", "diagonal"};

struct KeyDef {
  std::string name;
  std::function<void(RunConfig&, const nlohmann::json&)> from_json;
  std::function<ojson(const RunConfig&)> to_json;
  std::function<void(RunConfig&, const RunConfig&)> copy;
  std::function<CLI::Option*(CLI::App&, RunConfig&)> add;
};

template <class T>
void assign(T& dst, const nlohmann::json& v, const std::string& name) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(name, "expected true or false");
    dst = v.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(name, "expected an integer");
    dst = v.get<T>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(name, "expected a number");
    dst = v.get<T>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(name, "expected a string");
    dst = v.get<std::string>();
  } else {
    if (!v.is_array()) throw ConfigError(name, "expected an array of numbers");
    T out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(name, "expected an array of numbers");
      out.push_back(x.get<double>());
    }
    dst = std::move(out);
  }
}

template <class F>
KeyDef key(std::string name, std::string help, std::string range, F get) {
  using T = std::remove_reference_t<decltype(get(std::declval<RunConfig&>()))>;
  KeyDef d;
  d.name = name;
  d.from_json = [get, name](RunConfig& c, const nlohmann::json& v) { assign<T>(get(c), v, name); };
  d.to_json = [get](const RunConfig& c) { return ojson(get(const_cast<RunConfig&>(c))); };
  d.copy = [get](RunConfig& dst, const RunConfig& src) { get(dst) = get(const_cast<RunConfig&>(src)); };
  d.add = [get, name, help, range](CLI::App& app, RunConfig& target) -> CLI::Option* {
    const std::string desc = help + "; valid: " + range;
    if constexpr (std::is_same_v<T, bool>) {
      return app.add_flag("--" + name, get(target), desc + "; default " + (get(target) ? "true" : "false"));
    } else {
      return app.add_option("--" + name, get(target), desc)->capture_default_str();
    }
  };
  return d;
}

const std::vector<KeyDef>& keys() {
  static const std::vector<KeyDef> table{
      key("out", "output directory", "writable path", [](RunConfig& c) -> auto& { return c.out; }),
      key("input", "directory written by generate; empty generates in memory", "path or empty",
          [](RunConfig& c) -> auto& { return c.input; }),
      key("omega", "skew_potential field file for gauge", "path or empty",
          [](RunConfig& c) -> auto& { return c.omega; }),
      key("field", "vec2 field file for hodge", "path or empty", [](RunConfig& c) -> auto& { return c.field; }),
      key("N", "cells per axis", "integer >= 4", [](RunConfig& c) -> auto& { return c.N; }),
      key("n", "target dimension", "integer in [2, 8]; 3 for harmonic_map_s2",
          [](RunConfig& c) -> auto& { return c.n; }),
      key("generator", "problem generator", "harmonic_map_s2 | harmonic | random",
          [](RunConfig& c) -> auto& { return c.generator; }),
      key("degree", "harmonic-map degree", "1, 2 or 3", [](RunConfig& c) -> auto& { return c.degree; }),
      key("scale", "harmonic-map scale (start value when dilating)", "> 0",
          [](RunConfig& c) -> auto& { return c.scale; }),
      key("dilate", "halve the harmonic-map scale until the smallness scan passes", "true | false",
          [](RunConfig& c) -> auto& { return c.dilate; }),
      key("amplitude", "L2 norm of the random potential", ">= 0", [](RunConfig& c) -> auto& { return c.amplitude; }),
      key("modes", "cosine modes per axis of the random potential", "integer >= 1",
          [](RunConfig& c) -> auto& { return c.modes; }),
      key("seed", "random seed", "integer >= 0", [](RunConfig& c) -> auto& { return c.seed; }),
      key("mode", "gauge boundary mode", "free-boundary | dirichlet-identity",
          [](RunConfig& c) -> auto& { return c.mode; }),
      key("max_iterations", "gauge iteration cap", "integer >= 0",
          [](RunConfig& c) -> auto& { return c.gauge.max_iterations; }),
      key("grad_tol", "stop when ||G|| <= grad_tol (1 + ||Omega||)", "> 0",
          [](RunConfig& c) -> auto& { return c.gauge.grad_tol; }),
      key("energy_tol", "relative energy decrease that counts as a stall", "> 0",
          [](RunConfig& c) -> auto& { return c.gauge.energy_tol; }),
      key("stall_window", "iterations in the stall test", "integer >= 1",
          [](RunConfig& c) -> auto& { return c.gauge.stall_window; }),
      key("initial_step", "first trial step", "> 0", [](RunConfig& c) -> auto& { return c.gauge.initial_step; }),
      key("backtracking", "step reduction factor", "(0, 1)",
          [](RunConfig& c) -> auto& { return c.gauge.backtracking; }),
      key("armijo", "sufficient-decrease constant", "(0, 1)", [](RunConfig& c) -> auto& { return c.gauge.armijo; }),
      key("preconditioner_shift", "shift of the descent preconditioner", "> 0",
          [](RunConfig& c) -> auto& { return c.gauge.preconditioner_shift; }),
      key("p", "Morrey exponent", "(1, 2)", [](RunConfig& c) -> auto& { return c.morrey.p; }),
      key("gamma", "decay radius factor", "(0, 1/2)", [](RunConfig& c) -> auto& { return c.morrey.gamma; }),
      key("epsilon", "smallness level", "(0, 1)", [](RunConfig& c) -> auto& { return c.morrey.epsilon; }),
      key("R_max", "largest decay radius R", "(0, 1/4]", [](RunConfig& c) -> auto& { return c.morrey.R_max; }),
      key("R_levels", "dyadic levels below R_max", "integer >= 1",
          [](RunConfig& c) -> auto& { return c.morrey.R_levels; }),
      key("center_stride", "cell stride of decay centers", "integer >= 1",
          [](RunConfig& c) -> auto& { return c.morrey.center_stride; }),
      key("sub_stride", "cell stride of sub-ball centers in M_p", "integer >= 1",
          [](RunConfig& c) -> auto& { return c.morrey.sub_stride; }),
      key("threads", "worker threads", "integer >= 1", [](RunConfig& c) -> auto& { return c.threads; }),
      key("per_ball", "also gauge on the square around every B_2R(z)", "true | false",
          [](RunConfig& c) -> auto& { return c.per_ball; }),
      key("metric", "target metric family for frame", "euclidean | conformal | diagonal",
          [](RunConfig& c) -> auto& { return c.metric; }),
      key("metric_coefficients", "conformal: phi(y) = sum c_k y_k, g = exp(2 phi) I; diagonal: g_kk = 1 + c_k y_k^2",
          "at most n numbers", [](RunConfig& c) -> auto& { return c.metric_coefficients; }),
      key("pgm", "also write 16-bit PGM images", "true | false", [](RunConfig& c) -> auto& { return c.pgm; }),
  };
  return table;
}

bool one_of(const std::string& v, const std::vector<std::string>& options) {
  return std::find(options.begin(), options.end(), v) != options.end();
}

GaugeOptions gauge_options(const RunConfig& cfg) {
  GaugeOptions o = cfg.gauge;
  o.mode = cfg.mode == "dirichlet-identity" ? GaugeMode::DirichletIdentity : GaugeMode::FreeBoundary;
  o.threads = cfg.threads;
  return o;
}

MorreyConfig morrey_config(const RunConfig& cfg) {
  MorreyConfig m = cfg.morrey;
  m.threads = cfg.threads;
  return m;
}

void build_app(CLI::App& app, RunConfig& flags, std::map<std::string, CLI::Option*>& options) {
  app.description("Coulomb-gauge construction and decay diagnostics on the unit square.");
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--config", flags.config_path, "flat JSON file whose keys mirror the flags below");
  for (const auto& k : keys()) options[k.name] = k.add(app, flags);
  app.add_subcommand("generate", "write a problem instance as field files");
  app.add_subcommand("gauge", "minimize the gauge energy for Omega");
  app.add_subcommand("hodge", "Hodge-decompose a vec2 field (default: grad u^0)");
  app.add_subcommand("decay", "gauge, then run the decay experiment");
  app.add_subcommand("frame", "build the metric frame and the transformed system");
  app.add_subcommand("pipeline", "end-to-end run with a versioned report");
}

// ---------------------------------------------------------------------------

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Artifacts {
 public:
  explicit Artifacts(const fs::path& dir) : dir_(dir) { fs::create_directories(dir); }

  void text(const std::string& name, std::string_view content) {
    write_text(dir_ / name, content);
    files_[name] = content.size();
  }

  // 16-bit big-endian P5, first row at the top (largest y), linear min-max.
  void pgm(const std::string& name, const std::string& quantity, int N, std::span<const double> values) {
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    std::string data = "P5\n" + std::to_string(N) + " " + std::to_string(N) + "\n65535\n";
    for (int j = N - 1; j >= 0; --j) {
      for (int i = 0; i < N; ++i) {
        const double v = values[static_cast<std::size_t>(j) * N + i];
        const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
        const auto q = static_cast<unsigned>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
        data.push_back(static_cast<char>((q >> 8) & 0xff));
        data.push_back(static_cast<char>(q & 0xff));
      }
    }
    text(name + ".pgm", data);
    ojson side{{"file", name + ".pgm"},
               {"quantity", quantity},
               {"N", N},
               {"min", lo},
               {"max", hi},
               {"scaling", "linear"},
               {"bits", 16},
               {"first_row", "top, y = 1 - h/2"}};
    text(name + ".json", side.dump(2) + "\n");
  }

  void manifest(const RunConfig& cfg, int exit_code) {
    ojson files = ojson::array();
    for (const auto& [name, bytes] : files_) files.push_back({{"path", name}, {"bytes", bytes}});
    ojson m{{"tool", "cgauge"},
            {"subcommand", cfg.subcommand},
            {"exit_code", exit_code},
            {"config", ojson::parse(config_json(cfg))},
            {"files", files}};
    write_text(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::map<std::string, std::size_t> files_;
};

ProblemInstance read_problem_dir(const fs::path& dir) {
  const fs::path meta_path = dir / "problem.json";
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text(meta_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FieldFormatError(meta_path.string(), e.byte, "malformed JSON");
  }
  SkewPotential omega = read_skew_potential(dir / "omega.json");
  std::vector<ScalarField> u;
  const int components = meta.value("components", 0);
  for (int k = 0; k < components; ++k) {
    u.push_back(read_scalar_field(dir / ("u" + std::to_string(k) + ".json")));
    if (!(u.back().grid() == omega.grid())) {
      throw FieldFormatError((dir / ("u" + std::to_string(k) + ".json")).string(), 0, "grid differs from omega.json");
    }
  }
  return ProblemInstance{meta.value("generator", std::string("file")),
                         std::move(u),
                         std::move(omega),
                         meta.value("degree", 0),
                         meta.value("scale", 1.0),
                         meta.value("expected_order", 2.0)};
}

ProblemInstance make_problem(const RunConfig& cfg) {
  if (!cfg.input.empty()) return read_problem_dir(cfg.input);
  const Grid grid(cfg.N);
  if (cfg.generator == "harmonic_map_s2") {
    return cfg.dilate ? dilate_to_smallness(cfg.degree, grid, cfg.morrey.epsilon, cfg.scale)
                      : harmonic_map_s2(cfg.degree, grid, cfg.scale);
  }
  if (cfg.generator == "harmonic") return harmonic_problem(grid, cfg.n);
  return ProblemInstance{
      "random",
      {},
      random_smooth_potential(cfg.n, grid, cfg.amplitude, cfg.modes, static_cast<std::uint64_t>(cfg.seed)),
      0,
      cfg.amplitude,
      2.0};
}

void require_u(const ProblemInstance& p, const std::string& subcommand) {
  if (p.u.empty()) throw ConfigError("generator", p.generator + " provides no u, which " + subcommand + " needs");
}

int exit_for(const std::vector<Clause>& clauses) {
  return std::any_of(clauses.begin(), clauses.end(), [](const Clause& c) { return c.status == ClauseStatus::Fail; })
             ? 2
             : 0;
}

void print_clauses(std::ostream& out, const std::vector<Clause>& clauses) {
  for (const auto& c : clauses) {
    char line[200];
    std::snprintf(line, sizeof line, "  %-22s %-14s value %.6g threshold %.6g\n", c.name.c_str(),
                  to_string(c.status).c_str(), c.value, c.threshold);
    out << line;
  }
}

std::string decay_csv(const DecayReport& d) {
  std::string s = "center_x,center_y,R,J_gammaR,M_2R,ratio,smallness_ok,harmonic_term,f_term,g_term,degenerate\n";
  for (const auto& e : d.entries) {
    s += fmt(e.center[0]) + "," + fmt(e.center[1]) + "," + fmt(e.R) + "," + fmt(e.J_gammaR) + "," + fmt(e.M_2R) + "," +
         fmt(e.ratio) + "," + (e.smallness_ok ? "1" : "0") + "," + fmt(e.harmonic_term) + "," + fmt(e.f_term) + "," +
         fmt(e.g_term) + "," + (e.degenerate ? "1" : "0") + "\n";
  }
  return s;
}

std::string energies_csv(const GaugeResult& g) {
  std::string s = "iteration,energy,residual\n";
  for (std::size_t k = 0; k < g.energies.size(); ++k) {
    s +=
        std::to_string(k) + "," + fmt(g.energies[k]) + "," + (k < g.residuals.size() ? fmt(g.residuals[k]) : "") + "\n";
  }
  return s;
}

std::vector<double> grad_magnitude(std::span<const ScalarField> u) {
  std::vector<VecField> du;
  for (const auto& comp : u) du.push_back(grad(comp));
  return magnitude(du);
}

std::vector<double> energy_density(const SkewPotential& omega) {
  std::vector<double> out(omega.grid().cells());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = omega.cell_norm2(c);
  return out;
}

// ---------------------------------------------------------------------------

int run_generate(const RunConfig& cfg, Artifacts& art, std::ostream& out) {
  const ProblemInstance p = make_problem(cfg);
  const Grid& g = p.omega.grid();
  art.text("omega.json", field_json(p.omega));
  for (std::size_t k = 0; k < p.u.size(); ++k) art.text("u" + std::to_string(k) + ".json", field_json(p.u[k]));
  ojson meta{{"generator", p.generator},
             {"degree", p.degree},
             {"scale", p.scale},
             {"N", g.N()},
             {"n", p.omega.n()},
             {"components", p.u.size()},
             {"expected_order", p.expected_order},
             {"equation_residual", p.u.empty() ? ojson(nullptr) : ojson(equation_residual(p.u, p.omega))},
             {"omega_norm", l2_norm(p.omega)}};
  art.text("problem.json", meta.dump(2) + "\n");

  const auto om = magnitude(p.omega);
  std::string csv = "i,j,x,y";
  for (std::size_t k = 0; k < p.u.size(); ++k) csv += ",u" + std::to_string(k);
  csv += ",omega_norm\n";
  for (int j = 0; j < g.N(); ++j) {
    for (int i = 0; i < g.N(); ++i) {
      const std::size_t c = g.index(i, j);
      csv += std::to_string(i) + "," + std::to_string(j) + "," + fmt(g.x(i)) + "," + fmt(g.y(j));
      for (const auto& comp : p.u) csv += "," + fmt(comp[c]);
      csv += "," + fmt(om[c]) + "\n";
    }
  }
  art.text("fields.csv", csv);
  if (cfg.pgm) {
    art.pgm("omega_norm", "|Omega|", g.N(), om);
    if (!p.u.empty()) art.pgm("grad_u", "|grad u|", g.N(), grad_magnitude(p.u));
  }
  out << p.generator << " on N = " << g.N() << ", n = " << p.omega.n() << ", scale " << p.scale << "\n";
  return 0;
}

int run_gauge(const RunConfig& cfg, Artifacts& art, std::ostream& out) {
  const SkewPotential omega = cfg.omega.empty() ? make_problem(cfg).omega : read_skew_potential(cfg.omega);
  const GaugeResult gr = minimize(omega, gauge_options(cfg));
  const auto clauses = gauge_clauses(gr, omega.n());
  ojson rep = to_json(gr);
  rep["mode"] = cfg.mode;
  rep["clauses"] = to_json(clauses);
  art.text("gauge_report.json", rep.dump(2) + "\n");
  art.text("P.json", field_json(gr.P));
  art.text("omega_P.json", field_json(gr.omega_P));
  art.text("energies.csv", energies_csv(gr));
  if (cfg.pgm) art.pgm("energy_density", "|Omega^P|^2", omega.grid().N(), energy_density(gr.omega_P));
  out << "gauge: " << gr.iterations << " iterations (" << to_string(gr.termination) << ")\n";
  print_clauses(out, clauses);
  return exit_for(clauses);
}

int run_hodge(const RunConfig& cfg, Artifacts& art, std::ostream& out) {
  VecField V = [&] {
    if (!cfg.field.empty()) return read_vec2_field(cfg.field);
    const ProblemInstance p = make_problem(cfg);
    require_u(p, "hodge");
    return grad(p.u.front());
  }();
  const Grid& g = V.grid();
  const HodgeParts hp = hodge_decompose(V);
  const double norm = l2_norm(V);
  const double rel = norm > 0.0 ? hp.reconstruction_residual / norm : 0.0;
  const std::vector<Clause> clauses{{"hodge_reconstruction", rel <= 1e-10 ? ClauseStatus::Pass : ClauseStatus::Fail,
                                     rel, 1e-10, "relative reconstruction error"}};
  ojson rep{{"input", norm},
            {"grad_f", l2_norm(grad(hp.f))},
            {"grad_g", l2_norm(grad(hp.g))},
            {"h", l2_norm(hp.h)},
            {"reconstruction_residual", hp.reconstruction_residual},
            {"div_h", hp.div_residual},
            {"curl_h", hp.curl_residual},
            {"margin", kHodgeMargin},
            {"clauses", to_json(clauses)}};
  art.text("hodge_report.json", rep.dump(2) + "\n");
  art.text("f.json", field_json(hp.f));
  art.text("g.json", field_json(hp.g));
  art.text("h.json", field_json(hp.h));
  std::string csv = "i,j,x,y,V_x,V_y,f,g,h_x,h_y\n";
  for (int j = 0; j < g.N(); ++j) {
    for (int i = 0; i < g.N(); ++i) {
      const std::size_t c = g.index(i, j);
      csv += std::to_string(i) + "," + std::to_string(j) + "," + fmt(g.x(i)) + "," + fmt(g.y(j)) + "," + fmt(V[c][0]) +
             "," + fmt(V[c][1]) + "," + fmt(hp.f[c]) + "," + fmt(hp.g[c]) + "," + fmt(hp.h[c][0]) + "," +
             fmt(hp.h[c][1]) + "\n";
    }
  }
  art.text("hodge.csv", csv);
  if (cfg.pgm) art.pgm("h_norm", "|h|", g.N(), magnitude(hp.h));
  out << "hodge: ||V|| = " << norm << "\n";
  print_clauses(out, clauses);
  return exit_for(clauses);
}

int run_decay(const RunConfig& cfg, Artifacts& art, std::ostream& out) {
  const ProblemInstance p = make_problem(cfg);
  require_u(p, "decay");
  const MorreyConfig mc = morrey_config(cfg);
  const GaugeResult gr = minimize(p.omega, gauge_options(cfg));
  const DecayReport d = decay_experiment(p.u, p.omega, gr.P, mc);
  const auto clauses = decay_clauses(d, mc);
  ojson rep = to_json(d);
  rep["clauses"] = to_json(clauses);
  art.text("decay_report.json", rep.dump(2) + "\n");
  art.text("decay.csv", decay_csv(d));
  if (cfg.pgm) art.pgm("grad_u", "|grad u|", p.omega.grid().N(), grad_magnitude(p.u));
  out << "decay: " << d.entries.size() << " pairs, max ratio " << d.max_ratio() << "\n";
  print_clauses(out, clauses);
  return exit_for(clauses);
}

MetricData metric_from(const RunConfig& cfg, int n) {
  if (static_cast<int>(cfg.metric_coefficients.size()) > n) {
    throw ConfigError("metric_coefficients", "has more entries than n = " + std::to_string(n));
  }
  if (cfg.metric == "euclidean") return MetricData::euclidean(n);
  if (cfg.metric == "conformal") {
    Polynomial phi;
    for (std::size_t k = 0; k < cfg.metric_coefficients.size(); ++k) {
      std::vector<int> e(static_cast<std::size_t>(n), 0);
      e[k] = 1;
      phi.terms.push_back({cfg.metric_coefficients[k], e});
    }
    return MetricData::conformal(n, phi);
  }
  std::vector<Polynomial> diag;
  for (int k = 0; k < n; ++k) {
    Polynomial q{{{1.0, std::vector<int>(static_cast<std::size_t>(n), 0)}}};
    if (k < static_cast<int>(cfg.metric_coefficients.size())) {
      std::vector<int> e(static_cast<std::size_t>(n), 0);
      e[k] = 2;
      q.terms.push_back({cfg.metric_coefficients[k], e});
    }
    diag.push_back(q);
  }
  return MetricData::diagonal(diag);
}

int run_frame(const RunConfig& cfg, Artifacts& art, std::ostream& out) {
  const ProblemInstance p = make_problem(cfg);
  require_u(p, "frame");
  const int n = p.omega.n();
  const MetricData metric = metric_from(cfg, n);
  const FrameData frame = build_frame(metric);
  const Grid& g = p.omega.grid();

  std::vector<double> defect(g.cells());
  double max_defect = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) y[k] = p.u[k][c];
    const SmallMat e = frame.e(y);
    defect[c] = (e.transpose() * e - metric.metric(y)).cwiseAbs().maxCoeff();
    max_defect = std::max(max_defect, defect[c]);
  }
  const TransformedSystem sys = assemble_transformed_system(frame, p.omega, p.u);
  const double tr = transformed_residual(sys);
  const double mr = metric_system_residual(metric, p.omega, p.u);

  const std::size_t center = g.index(g.N() / 2, g.N() / 2);
  std::vector<double> yc(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) yc[k] = p.u[k][center];
  const Christoffel gamma = christoffel(metric, yc);

  const std::vector<Clause> clauses{
      {"frame_factorization", max_defect <= 1e-10 ? ClauseStatus::Pass : ClauseStatus::Fail, max_defect, 1e-10,
       "max |e^T e - g| over cells"},
      {"frame_inversion", sys.inversion_residual <= 1e-10 ? ClauseStatus::Pass : ClauseStatus::Fail,
       sys.inversion_residual, 1e-10, "||grad u - F^T xi|| / ||grad u||"}};
  ojson rep{{"metric", cfg.metric},
            {"metric_coefficients", cfg.metric_coefficients},
            {"n", n},
            {"ellipticity", ellipticity_constant(metric, p.u)},
            {"max_frame_defect", max_defect},
            {"inversion_residual", sys.inversion_residual},
            {"omega_defect", sys.omega_defect},
            {"omega_tilde_defect", sys.omega_tilde_defect},
            {"transformed_residual", tr},
            {"metric_system_residual", mr},
            {"christoffel_center", gamma.data},
            {"clauses", to_json(clauses)}};
  art.text("frame_report.json", rep.dump(2) + "\n");
  const auto theta = magnitude(sys.theta);
  std::string csv = "i,j,x,y,frame_defect,theta_norm\n";
  for (int j = 0; j < g.N(); ++j) {
    for (int i = 0; i < g.N(); ++i) {
      const std::size_t c = g.index(i, j);
      csv += std::to_string(i) + "," + std::to_string(j) + "," + fmt(g.x(i)) + "," + fmt(g.y(j)) + "," +
             fmt(defect[c]) + "," + fmt(theta[c]) + "\n";
    }
  }
  art.text("frame.csv", csv);
  if (cfg.pgm) art.pgm("theta_norm", "|theta|", g.N(), theta);
  out << "frame: " << cfg.metric << ", transformed residual " << tr << ", original residual " << mr << "\n";
  print_clauses(out, clauses);
  return exit_for(clauses);
}

int run_pipeline_cmd(const RunConfig& cfg, Artifacts& art, std::ostream& out) {
  const ProblemInstance p = make_problem(cfg);
  require_u(p, "pipeline");
  PipelineOptions opts{gauge_options(cfg), morrey_config(cfg), cfg.per_ball};
  const PipelineReport rep = run_pipeline(p, opts);
  art.text("report.json", report_json(rep));
  art.text("decay.csv", decay_csv(rep.decay));
  art.text("energies.csv", energies_csv(rep.gauge));
  if (cfg.pgm) {
    const int N = p.omega.grid().N();
    art.pgm("grad_u", "|grad u|", N, grad_magnitude(p.u));
    art.pgm("energy_density", "|Omega^P|^2", N, energy_density(rep.gauge.omega_P));
  }
  out << report_summary(rep);
  return rep.all_passed() ? 0 : 2;
}

}  // namespace

void RunConfig::validate() const {
  if (!subcommand.empty() && !one_of(subcommand, kSubcommands)) throw ConfigError("subcommand", "unknown subcommand");
  if (N < 4) throw ConfigError("N", "must be >= 4");
  if (n < 2 || n > kMaxN) throw ConfigError("n", "must lie in [2, " + std::to_string(kMaxN) + "]");
  if (!one_of(generator, kGenerators)) throw ConfigError("generator", "must be harmonic_map_s2, harmonic or random");
  if (generator == "harmonic_map_s2" && n != 3 && input.empty()) {
    throw ConfigError("n", "harmonic_map_s2 maps into S^2 and needs n = 3");
  }
  if (degree < 1 || degree > 3) throw ConfigError("degree", "must be 1, 2 or 3");
  if (!(scale > 0.0)) throw ConfigError("scale", "must be > 0");
  if (!(amplitude >= 0.0)) throw ConfigError("amplitude", "must be >= 0");
  if (modes < 1) throw ConfigError("modes", "must be >= 1");
  if (seed < 0) throw ConfigError("seed", "must be >= 0");
  if (mode != "free-boundary" && mode != "dirichlet-identity") {
    throw ConfigError("mode", "must be free-boundary or dirichlet-identity");
  }
  if (threads < 1) throw ConfigError("threads", "must be >= 1");
  gauge_options(*this).validate();
  morrey_config(*this).validate();
  if (!one_of(metric, kMetrics)) throw ConfigError("metric", "must be euclidean, conformal or diagonal");
  if (static_cast<int>(metric_coefficients.size()) > n) throw ConfigError("metric_coefficients", "more entries than n");
  if (out.empty()) throw ConfigError("out", "must not be empty");
}

RunConfig apply_config_json(std::string_view text, RunConfig base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", "malformed JSON at byte " + std::to_string(e.byte));
  }
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");
  for (const auto& item : j.items()) {
    const auto it = std::find_if(keys().begin(), keys().end(), [&](const KeyDef& k) { return k.name == item.key(); });
    if (it == keys().end()) throw ConfigError(item.key(), "unknown key");
    it->from_json(base, item.value());
  }
  return base;
}

RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig flags;
  std::map<std::string, CLI::Option*> options;
  CLI::App app{"", "cgauge"};
  build_app(app, flags, options);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(reversed);

  RunConfig cfg;
  if (!flags.config_path.empty()) {
    std::string text;
    try {
      text = read_text(flags.config_path);
    } catch (const Error& e) {
      throw ConfigError("config", e.what());
    }
    cfg = apply_config_json(text, cfg);
  }
  for (const auto& k : keys()) {
    if (options.at(k.name)->count() > 0) k.copy(cfg, flags);
  }
  cfg.config_path = flags.config_path;
  for (const auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();
  cfg.validate();
  return cfg;
}

std::string config_json(const RunConfig& cfg) {
  ojson j;
  for (const auto& k : keys()) j[k.name] = k.to_json(cfg);
  return j.dump(2) + "\n";
}

int run(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  Artifacts art(cfg.out);
  int code = 0;
  if (cfg.subcommand == "generate") {
    code = run_generate(cfg, art, out);
  } else if (cfg.subcommand == "gauge") {
    code = run_gauge(cfg, art, out);
  } else if (cfg.subcommand == "hodge") {
    code = run_hodge(cfg, art, out);
  } else if (cfg.subcommand == "decay") {
    code = run_decay(cfg, art, out);
  } else if (cfg.subcommand == "frame") {
    code = run_frame(cfg, art, out);
  } else if (cfg.subcommand == "pipeline") {
    code = run_pipeline_cmd(cfg, art, out);
  } else {
    throw ConfigError("subcommand", "missing subcommand");
  }
  art.manifest(cfg, code);
  return code;
}

std::string help_text() {
  RunConfig flags;
  std::map<std::string, CLI::Option*> options;
  CLI::App app{"", "cgauge"};
  build_app(app, flags, options);
  return app.help();
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  RunConfig cfg;
  try {
    cfg = parse_args(args);
  } catch (const CLI::Success&) {
    std::cout << help_text();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    return run(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cgauge
