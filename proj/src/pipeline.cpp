#include "cgauge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cgauge/errors.hpp"
#include "cgauge/numeric.hpp"

namespace cgauge {

double transformed_equation_residual(const RotationField& P, std::span<const ScalarField> u,
                                     const SkewPotential& omega) {
  const Grid& grid = omega.grid();
  const int n = omega.n();
  if (P.n() != n || !(P.grid() == grid)) throw DimensionMismatch("transformed_equation_residual: P and Omega differ");
  if (static_cast<int>(u.size()) != n) throw DimensionMismatch("transformed_equation_residual: u has wrong count");
  const auto V = gauged_gradient(u, P);
  const SkewPotential omega_P = gauge_action(P, omega).omega_P;
  std::vector<ScalarField> source(static_cast<std::size_t>(n), ScalarField(grid));
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) {
        for (int dir = 0; dir < 2; ++dir) s += omega_P.get(c, dir, i, j) * V[j][c][dir];
      }
      source[i][c] = s;
    }
  }
  CompensatedSum total;
  for (const auto& phi : test_bumps(grid)) {
    const VecField dphi = grad(phi);
    for (int i = 0; i < n; ++i) {
      const double r = -inner(V[i], dphi) + inner(source[i], phi);
      total.add(r * r);
    }
  }
  return std::sqrt(total.value());
}

std::string to_string(ClauseStatus s) {
  switch (s) {
    case ClauseStatus::Pass:
      return "pass";
    case ClauseStatus::Fail:
      return "fail";
    case ClauseStatus::NotApplicable:
      return "not-applicable";
  }
  return "unknown";
}

bool PipelineReport::all_passed() const {
  return std::none_of(clauses.begin(), clauses.end(), [](const Clause& c) { return c.status == ClauseStatus::Fail; });
}

const Clause* PipelineReport::clause(const std::string& name) const {
  for (const auto& c : clauses) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

ClauseStatus verdict(bool ok) { return ok ? ClauseStatus::Pass : ClauseStatus::Fail; }

double max_cell_norm(const SkewPotential& omega) {
  double m = 0.0;
  for (std::size_t c = 0; c < omega.grid().cells(); ++c) m = std::max(m, std::sqrt(omega.cell_norm2(c)));
  return m;
}

std::vector<PerBallEntry> per_ball_gauges(const ProblemInstance& problem, const DecayReport& decay,
                                          const PipelineOptions& opts) {
  const Grid& g = problem.omega.grid();
  const int n = problem.omega.n();
  const double p = opts.morrey.p;
  std::vector<VecField> du;
  for (const auto& comp : problem.u) du.push_back(grad(comp));

  std::vector<PerBallEntry> out;
  out.reserve(decay.entries.size());
  for (const auto& e : decay.entries) {
    const int iz = static_cast<int>(std::lround(e.center[0] / g.h() - 0.5));
    const int jz = static_cast<int>(std::lround(e.center[1] / g.h() - 0.5));
    const int r = static_cast<int>(std::floor(2.0 * e.R / g.h() + 1e-9));
    const int K = 2 * r + 1;
    const Grid sub(K);
    const double s = K * g.h();

    SkewPotential omega(sub, n);
    for (int j = 0; j < K; ++j) {
      for (int i = 0; i < K; ++i) {
        const std::size_t src = g.index(iz - r + i, jz - r + j);
        const std::size_t dst = sub.index(i, j);
        for (int dir = 0; dir < 2; ++dir) omega.set_matrix(dst, dir, s * problem.omega.matrix(src, dir));
      }
    }
    const GaugeResult gr = minimize(omega, opts.gauge);

    std::vector<VecField> rows(static_cast<std::size_t>(n), VecField(sub));
    for (int j = 0; j < K; ++j) {
      for (int i = 0; i < K; ++i) {
        const std::size_t src = g.index(iz - r + i, jz - r + j);
        const std::size_t dst = sub.index(i, j);
        for (int a = 0; a < n; ++a) {
          Vec2 acc{0.0, 0.0};
          for (int k = 0; k < n; ++k) {
            acc[0] += gr.P.entry(dst, k, a) * du[k][src][0];
            acc[1] += gr.P.entry(dst, k, a) * du[k][src][1];
          }
          rows[a][dst] = acc;
        }
      }
    }
    std::vector<VecField> df, dg;
    for (const auto& row : rows) {
      const HodgeParts hp = hodge_decompose(row);
      df.push_back(grad(hp.f));
      dg.push_back(grad(hp.g));
    }
    const Ball ball{{0.5, 0.5}, 2.0 * e.R / s};
    PerBallEntry pb{};
    pb.center = e.center;
    pb.R = e.R;
    pb.iterations = gr.iterations;
    pb.converged = gr.converged;
    pb.f_term = s * s * lp_norm_on_ball(sub, magnitude(df), p, ball);
    pb.g_term = s * s * lp_norm_on_ball(sub, magnitude(dg), p, ball);
    pb.global_f_term = e.f_term;
    pb.global_g_term = e.g_term;
    out.push_back(pb);
  }
  return out;
}

}  // namespace

std::vector<Clause> gauge_clauses(const GaugeResult& gr, int n) {
  std::vector<Clause> out;
  {
    const double omega2 = gr.omega_norm * gr.omega_norm;
    const double excess = gr.energies.back() - omega2;
    bool monotone = true;
    for (std::size_t k = 1; k < gr.energies.size(); ++k) monotone = monotone && gr.energies[k] <= gr.energies[k - 1];
    std::string detail = "E(P) - ||Omega||^2";
    if (!monotone) detail += "; energy trace increased";
    if (!gr.converged) detail += "; not converged (" + to_string(gr.termination) + ")";
    out.push_back({"gauge_energy_bound", verdict(gr.converged && monotone && excess <= 1e-9), excess, 1e-9, detail});
  }
  {
    const double slack = 1.05;
    double value = 0.0;
    if (gr.omega_norm > 0.0) {
      value =
          std::max(gr.grad_P_norm / (2.0 * gr.omega_norm), (gr.grad_P_norm + gr.omega_P_norm) / (3.0 * gr.omega_norm));
    } else if (gr.grad_P_norm + gr.omega_P_norm > 0.0) {
      value = HUGE_VAL;
    }
    out.push_back({"a_priori_estimates", verdict(value <= slack), value, slack,
                   "max(||grad P|| / 2||Omega||, (||grad P|| + ||Omega^P||) / 3||Omega||)"});
  }
  {
    const double tol = n == 2 ? 1e-6 : 1e-4;
    const double value = gr.weak_residual / (1.0 + gr.omega_P_norm);
    out.push_back({"conservation_law", verdict(value <= tol), value, tol, "weak div(Omega^P) / (1 + ||Omega^P||)"});
  }
  return out;
}

std::vector<Clause> decay_clauses(const DecayReport& decay, const MorreyConfig& cfg) {
  std::vector<Clause> out;
  const bool small = decay.smallness.ok;
  out.push_back({"smallness", verdict(small), decay.smallness.sup, cfg.epsilon,
                 small ? "sup r^(2-m) int |Omega|^2" : "SmallnessViolated"});
  {
    const double bound = 0.6, need = 0.95;
    const double frac = decay.fraction_at_most(bound);
    ClauseStatus st = verdict(frac >= need);
    std::string detail = "fraction of ratios <= 0.6";
    if (!small) {
      st = ClauseStatus::NotApplicable;
      detail = "SmallnessViolated";
    } else if (decay.entries.empty() || decay.degenerate) {
      st = ClauseStatus::NotApplicable;
      detail = "no non-degenerate (z, R) pairs";
    }
    out.push_back({"decay", st, frac, need, detail});
  }
  return out;
}

PipelineReport run_pipeline(const ProblemInstance& problem, const PipelineOptions& opts) {
  opts.gauge.validate();
  opts.morrey.validate();
  const Grid& g = problem.omega.grid();
  const int n = problem.omega.n();
  if (static_cast<int>(problem.u.size()) != n) throw DimensionMismatch("run_pipeline: u and Omega disagree on n");

  PipelineReport rep{.generator = problem.generator,
                     .degree = problem.degree,
                     .scale = problem.scale,
                     .N = g.N(),
                     .n = n,
                     .equation_residual = equation_residual(problem.u, problem.omega),
                     .gauge = minimize(problem.omega, opts.gauge)};
  const GaugeResult& gr = rep.gauge;

  rep.transformed_residual = transformed_equation_residual(gr.P, problem.u, problem.omega);
  std::vector<VecField> du;
  for (const auto& comp : problem.u) du.push_back(grad(comp));
  rep.transformed_tolerance =
      kTransformedConstant * g.h() * g.h() * (1.0 + max_cell_norm(problem.omega)) * l2_norm(std::span(du));

  for (const auto& row : gauged_gradient(problem.u, gr.P)) {
    const HodgeParts hp = hodge_decompose(row);
    rep.hodge.push_back({l2_norm(row), l2_norm(grad(hp.f)), l2_norm(grad(hp.g)), l2_norm(hp.h),
                         hp.reconstruction_residual, hp.div_residual, hp.curl_residual});
  }

  rep.decay = decay_experiment(problem.u, problem.omega, gr.P, opts.morrey);
  if (opts.per_ball) rep.per_ball = per_ball_gauges(problem, rep.decay, opts);

  rep.clauses = gauge_clauses(gr, n);
  rep.clauses.push_back({"transformed_equation", verdict(rep.transformed_residual <= rep.transformed_tolerance),
                         rep.transformed_residual, rep.transformed_tolerance,
                         "weak residual of div(P^T grad u) = -Omega^P . P^T grad u"});
  {
    double value = 0.0;
    for (const auto& hr : rep.hodge) {
      if (hr.input_norm > 0.0) value = std::max(value, hr.reconstruction_residual / hr.input_norm);
    }
    rep.clauses.push_back(
        {"hodge_reconstruction", verdict(value <= 1e-10), value, 1e-10, "max relative reconstruction error over rows"});
  }
  for (auto& c : decay_clauses(rep.decay, opts.morrey)) rep.clauses.push_back(std::move(c));
  return rep;
}

namespace {

using ojson = nlohmann::ordered_json;

ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson num_array(const std::vector<double>& v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

}  // namespace

ojson to_json(const GaugeResult& g) {
  return {{"energies", num_array(g.energies)},
          {"residuals", num_array(g.residuals)},
          {"norms", {{"grad_P", num(g.grad_P_norm)}, {"omega_P", num(g.omega_P_norm)}, {"omega", num(g.omega_norm)}}},
          {"weak_residual", num(g.weak_residual)},
          {"symmetric_defect", num(g.symmetric_defect)},
          {"converged", g.converged},
          {"termination", to_string(g.termination)},
          {"iterations", g.iterations}};
}

ojson to_json(const DecayReport& d) {
  ojson entries = ojson::array();
  for (const auto& e : d.entries) {
    entries.push_back({{"center", {num(e.center[0]), num(e.center[1])}},
                       {"R", num(e.R)},
                       {"J_gammaR", num(e.J_gammaR)},
                       {"M_2R", num(e.M_2R)},
                       {"ratio", num(e.ratio)},
                       {"smallness_ok", e.smallness_ok},
                       {"harmonic_term", num(e.harmonic_term)},
                       {"f_term", num(e.f_term)},
                       {"g_term", num(e.g_term)},
                       {"degenerate", e.degenerate}});
  }
  const auto& sm = d.smallness;
  return {{"smallness",
           {{"sup", num(sm.sup)},
            {"argmax",
             {{"center", {num(sm.argmax.center[0]), num(sm.argmax.center[1])}}, {"radius", num(sm.argmax.radius)}}},
            {"ok", sm.ok}}},
          {"max_ratio", num(d.max_ratio())},
          {"degenerate", d.degenerate},
          {"entries", entries}};
}

ojson to_json(const std::vector<Clause>& clauses) {
  ojson out = ojson::array();
  for (const auto& c : clauses) {
    out.push_back({{"name", c.name},
                   {"status", to_string(c.status)},
                   {"value", num(c.value)},
                   {"threshold", num(c.threshold)},
                   {"detail", c.detail}});
  }
  return out;
}

std::string report_json(const PipelineReport& r) {
  ojson j;
  j["report_version"] = kReportVersion;
  j["problem"] = {{"generator", r.generator},
                  {"degree", r.degree},
                  {"scale", num(r.scale)},
                  {"N", r.N},
                  {"n", r.n},
                  {"equation_residual", num(r.equation_residual)}};
  j["gauge"] = to_json(r.gauge);
  j["transformed_equation"] = {{"residual", num(r.transformed_residual)}, {"tolerance", num(r.transformed_tolerance)}};
  ojson hodge = ojson::array();
  for (const auto& h : r.hodge) {
    hodge.push_back({{"input", num(h.input_norm)},
                     {"grad_f", num(h.f_norm)},
                     {"grad_g", num(h.g_norm)},
                     {"h", num(h.h_norm)},
                     {"reconstruction_residual", num(h.reconstruction_residual)},
                     {"div_h", num(h.div_residual)},
                     {"curl_h", num(h.curl_residual)}});
  }
  j["hodge"] = hodge;
  j["decay"] = to_json(r.decay);
  if (!r.per_ball.empty()) {
    ojson pb = ojson::array();
    for (const auto& e : r.per_ball) {
      pb.push_back({{"center", {num(e.center[0]), num(e.center[1])}},
                    {"R", num(e.R)},
                    {"iterations", e.iterations},
                    {"converged", e.converged},
                    {"f_term", num(e.f_term)},
                    {"g_term", num(e.g_term)},
                    {"global_f_term", num(e.global_f_term)},
                    {"global_g_term", num(e.global_g_term)}});
    }
    j["per_ball"] = pb;
  }
  j["clauses"] = to_json(r.clauses);
  j["passed"] = r.all_passed();
  return j.dump(2) + "\n";
}

std::string report_summary(const PipelineReport& r) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%s degree %d scale %.6g on N = %d, n = %d: gauge %d iterations (%s)\n",
                r.generator.c_str(), r.degree, r.scale, r.N, r.n, r.gauge.iterations,
                to_string(r.gauge.termination).c_str());
  out += line;
  for (const auto& c : r.clauses) {
    std::snprintf(line, sizeof line, "  %-22s %-14s value %.6g threshold %.6g\n", c.name.c_str(),
                  to_string(c.status).c_str(), c.value, c.threshold);
    out += line;
  }
  out += r.all_passed() ? "all clauses passed\n" : "some clauses failed\n";
  return out;
}

}  // namespace cgauge
