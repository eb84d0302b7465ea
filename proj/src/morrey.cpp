#include "cgauge/morrey.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cgauge/errors.hpp"
#include "cgauge/hodge.hpp"
#include "cgauge/numeric.hpp"
#include "cgauge/parallel.hpp"

namespace cgauge {

void MorreyConfig::validate() const {
  const double p_max = static_cast<double>(kDomainDim) / (kDomainDim - 1);
  if (!(p > 1.0 && p < p_max)) throw ConfigError("p", "must lie in (1, " + std::to_string(p_max) + ")");
  if (!(gamma > 0.0 && gamma < 0.5)) throw ConfigError("gamma", "must lie in (0, 1/2)");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon", "must lie in (0, 1)");
  if (!(R_max > 0.0 && R_max <= 0.25)) throw ConfigError("R_max", "must lie in (0, 1/4] so B_2R fits");
  if (R_levels < 1) throw ConfigError("R_levels", "must be >= 1");
  if (center_stride < 1) throw ConfigError("center_stride", "must be >= 1");
  if (sub_stride < 1) throw ConfigError("sub_stride", "must be >= 1");
  if (threads < 1) throw ConfigError("threads", "must be >= 1");
}

namespace {

std::vector<double> powered(std::span<const double> mag, double p) {
  std::vector<double> out(mag.size());
  for (std::size_t c = 0; c < mag.size(); ++c) out[c] = std::pow(std::abs(mag[c]), p);
  return out;
}

// Raw midpoint integral of a precomputed density over the ball.
double ball_integral(const Grid& g, std::span<const double> density, const Ball& ball) {
  const int N = g.N();
  const double h = g.h();
  const int i0 = std::max(0, static_cast<int>(std::floor((ball.center[0] - ball.radius) / h)) - 1);
  const int i1 = std::min(N - 1, static_cast<int>(std::ceil((ball.center[0] + ball.radius) / h)) + 1);
  const int j0 = std::max(0, static_cast<int>(std::floor((ball.center[1] - ball.radius) / h)) - 1);
  const int j1 = std::min(N - 1, static_cast<int>(std::ceil((ball.center[1] + ball.radius) / h)) + 1);
  CompensatedSum sum;
  std::size_t count = 0;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      if (!ball.contains(g.x(i), g.y(j))) continue;
      sum.add(density[g.index(i, j)]);
      ++count;
    }
  }
  if (count == 0) throw EmptyBall("no cell center inside ball of radius " + std::to_string(ball.radius));
  return sum.value() * h * h;
}

double weight(double rho, double p) { return std::pow(rho, p - kDomainDim); }

double sampled_sup(const Grid& g, std::span<const double> density, double p, Vec2 y, double varrho,
                   int sub_stride) {
  const Ball outer{y, varrho};
  const double rmin = 4.0 * g.h();
  double best = weight(varrho, p) * ball_integral(g, density, outer);
  for (double rho = varrho / 2; rho >= rmin * (1.0 - 1e-12); rho /= 2) {
    const double w = weight(rho, p);
    best = std::max(best, w * ball_integral(g, density, Ball{y, rho}));
    for (int j = 0; j < g.N(); j += sub_stride) {
      for (int i = 0; i < g.N(); i += sub_stride) {
        const Ball b{{g.x(i), g.y(j)}, rho};
        if (!b.inside(outer)) continue;
        best = std::max(best, w * ball_integral(g, density, b));
      }
    }
  }
  return best;
}

}  // namespace

double morrey_J(const Grid& grid, std::span<const double> magnitude, double p, const Ball& ball) {
  return weight(ball.radius, p) * lp_norm_on_ball(grid, magnitude, p, ball);
}

double morrey_J(const ScalarField& f, double p, const Ball& ball) {
  return morrey_J(f.grid(), magnitude(f), p, ball);
}

double morrey_J(const VecField& f, double p, const Ball& ball) { return morrey_J(f.grid(), magnitude(f), p, ball); }

double morrey_M(const Grid& grid, std::span<const double> magnitude, double p, Vec2 y, double varrho,
                int sub_stride) {
  if (p < 1.0) throw std::invalid_argument("morrey_M: p must be >= 1");
  if (sub_stride < 1) throw std::invalid_argument("morrey_M: sub_stride must be >= 1");
  return sampled_sup(grid, powered(magnitude, p), p, y, varrho, sub_stride);
}

double morrey_M(const ScalarField& f, double p, Vec2 y, double varrho, int sub_stride) {
  return morrey_M(f.grid(), magnitude(f), p, y, varrho, sub_stride);
}

double morrey_M(const VecField& f, double p, Vec2 y, double varrho, int sub_stride) {
  return morrey_M(f.grid(), magnitude(f), p, y, varrho, sub_stride);
}

SmallnessScan smallness_scan(const SkewPotential& omega, double epsilon, int stride) {
  const Grid& g = omega.grid();
  std::vector<double> density(g.cells());
  for (std::size_t c = 0; c < g.cells(); ++c) density[c] = omega.cell_norm2(c);
  SmallnessScan scan{0.0, Ball{{0.5, 0.5}, 0.5}, true};
  bool first = true;
  for (int j = 0; j < g.N(); j += stride) {
    for (int i = 0; i < g.N(); i += stride) {
      const double x = g.x(i), y = g.y(j);
      const double r = std::min(std::min(x, 1.0 - x), std::min(y, 1.0 - y));
      if (r < 2.0 * g.h()) continue;
      const Ball b{{x, y}, r};
      const double v = std::pow(r, 2 - kDomainDim) * ball_integral(g, density, b);
      if (first || v > scan.sup) {
        scan.sup = v;
        scan.argmax = b;
        first = false;
      }
    }
  }
  scan.ok = scan.sup <= epsilon;
  return scan;
}

HardyBmoProbe hardy_bmo_probe(const ScalarField& a, const VecField& Gamma, const ScalarField& c, double p,
                              const Ball& ball, int sub_stride) {
  const Grid& g = a.grid();
  if (!(Gamma.grid() == g) || !(c.grid() == g)) throw DimensionMismatch("hardy_bmo_probe: grids differ");
  const VecField da = grad(a);
  const VecField dc = grad(c);
  const ScalarField dG = div(Gamma);
  std::vector<double> integrand(g.cells()), gamma2(g.cells()), dc2(g.cells()), div2(g.cells());
  for (std::size_t q = 0; q < g.cells(); ++q) {
    integrand[q] = (da[q][0] * Gamma[q][0] + da[q][1] * Gamma[q][1]) * c[q];
    gamma2[q] = Gamma[q][0] * Gamma[q][0] + Gamma[q][1] * Gamma[q][1];
    dc2[q] = dc[q][0] * dc[q][0] + dc[q][1] * dc[q][1];
    div2[q] = dG[q] * dG[q];
  }
  HardyBmoProbe out{};
  out.lhs = std::abs(ball_integral(g, integrand, ball));
  out.gamma_norm = std::sqrt(ball_integral(g, gamma2, ball));
  out.grad_c_norm = std::sqrt(ball_integral(g, dc2, ball));
  out.div_gamma = std::sqrt(ball_integral(g, div2, ball));
  out.morrey_factor = std::pow(morrey_M(da, p, ball.center, 2.0 * ball.radius, sub_stride), 1.0 / p);
  const double product = out.gamma_norm * out.grad_c_norm * out.morrey_factor;
  out.degenerate = product == 0.0;
  out.c_hat = out.degenerate ? 0.0 : out.lhs / product;
  return out;
}

double DecayReport::fraction_at_most(double bound) const {
  std::size_t total = 0, good = 0;
  for (const auto& e : entries) {
    if (e.degenerate) continue;
    ++total;
    if (e.ratio <= bound) ++good;
  }
  return total == 0 ? 1.0 : static_cast<double>(good) / static_cast<double>(total);
}

double DecayReport::max_ratio() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.ratio);
  return m;
}

std::vector<VecField> gauged_gradient(std::span<const ScalarField> u, const RotationField& P) {
  const int n = P.n();
  if (static_cast<int>(u.size()) != n) throw DimensionMismatch("gauged_gradient: u has wrong component count");
  std::vector<VecField> du;
  du.reserve(u.size());
  for (const auto& comp : u) du.push_back(grad(comp));
  std::vector<VecField> rows(static_cast<std::size_t>(n), VecField(P.grid()));
  for (std::size_t c = 0; c < P.grid().cells(); ++c) {
    for (int i = 0; i < n; ++i) {
      Vec2 acc{0.0, 0.0};
      for (int k = 0; k < n; ++k) {
        const double w = P.entry(c, k, i);
        acc[0] += w * du[k][c][0];
        acc[1] += w * du[k][c][1];
      }
      rows[i][c] = acc;
    }
  }
  return rows;
}

DecayReport decay_experiment(std::span<const ScalarField> u, const SkewPotential& omega, const RotationField& P,
                             const MorreyConfig& cfg) {
  cfg.validate();
  const Grid& g = omega.grid();
  const double p = cfg.p;
  const int m = kDomainDim;

  std::vector<VecField> du;
  for (const auto& comp : u) du.push_back(grad(comp));
  const std::vector<double> du_p = powered(magnitude(du), p);

  const auto rows = gauged_gradient(u, P);
  std::vector<HodgeParts> parts;
  parts.reserve(rows.size());
  for (const auto& r : rows) parts.push_back(hodge_decompose(r));
  std::vector<VecField> df, dg;
  for (const auto& hp : parts) {
    df.push_back(grad(hp.f));
    dg.push_back(grad(hp.g));
  }
  const std::vector<double> df_p = powered(magnitude(df), p);
  const std::vector<double> dg_p = powered(magnitude(dg), p);
  std::vector<double> omega2(g.cells());
  for (std::size_t c = 0; c < g.cells(); ++c) omega2[c] = omega.cell_norm2(c);

  struct Pair {
    Vec2 z;
    double R;
  };
  std::vector<Pair> pairs;
  for (int level = 0; level < cfg.R_levels; ++level) {
    const double R = cfg.R_max * std::ldexp(1.0, -level);
    if (cfg.gamma * R < kMinInnerRadius * g.h()) break;
    for (int j = 0; j < g.N(); j += cfg.center_stride) {
      for (int i = 0; i < g.N(); i += cfg.center_stride) {
        const Vec2 z{g.x(i), g.y(j)};
        if (!Ball{z, 2.0 * R}.inside_unit_square()) continue;
        pairs.push_back({z, R});
      }
    }
  }
  // Sorted by center, then radius.
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.z[1] != b.z[1]) return a.z[1] < b.z[1];
    if (a.z[0] != b.z[0]) return a.z[0] < b.z[0];
    return a.R < b.R;
  });

  DecayReport rep;
  rep.entries.resize(pairs.size());
  parallel_for(pairs.size(), cfg.threads, [&](std::size_t q) {
    const auto [z, R] = pairs[q];
    DecayEntry e{};
    e.center = z;
    e.R = R;
    const Ball big{z, 2.0 * R};
    e.J_gammaR = weight(cfg.gamma * R, p) * ball_integral(g, du_p, Ball{z, cfg.gamma * R});
    e.M_2R = sampled_sup(g, du_p, p, z, 2.0 * R, cfg.sub_stride);
    e.degenerate = e.M_2R == 0.0;
    e.ratio = e.degenerate ? 0.0 : e.J_gammaR / e.M_2R;
    e.smallness_ok = std::pow(2.0 * R, 2 - m) * ball_integral(g, omega2, big) <= cfg.epsilon;
    e.harmonic_term = std::pow(cfg.gamma / 2.0, m) * ball_integral(g, du_p, big);
    e.f_term = ball_integral(g, df_p, big);
    e.g_term = ball_integral(g, dg_p, big);
    rep.entries[q] = e;
  });
  rep.smallness = smallness_scan(omega, cfg.epsilon);
  rep.degenerate = std::all_of(rep.entries.begin(), rep.entries.end(), [](const DecayEntry& e) { return e.degenerate; });
  return rep;
}

}  // namespace cgauge
