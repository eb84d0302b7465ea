#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "cgauge/errors.hpp"
#include "cgauge/morrey.hpp"
#include "cgauge/problem.hpp"
#include "support.hpp"

using namespace cgauge;

namespace {

ScalarField smooth_random(const Grid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  double a[3][3];
  for (auto& row : a) {
    for (double& v : row) v = d(rng);
  }
  return ScalarField::sample(g, [&](double x, double y) {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) {
      for (int l = 0; l < 3; ++l) s += a[k][l] * std::cos((k + 1) * 2.0 * x + 0.3 * l) * std::sin((l + 1) * 1.7 * y + k);
    }
    return s;
  });
}

// Smooth bump supported in the ball.
ScalarField ball_bump(const Grid& g, const Ball& b) {
  return ScalarField::sample(g, [&](double x, double y) {
    const double r2 = ((x - b.center[0]) * (x - b.center[0]) + (y - b.center[1]) * (y - b.center[1])) /
                      (b.radius * b.radius);
    return r2 < 1.0 ? (1.0 - r2) * (1.0 - r2) * (1.0 - r2) : 0.0;
  });
}

}  // namespace

TEST_CASE("J and M are p-homogeneous") {
  const Grid g(64);
  const ScalarField f = smooth_random(g, 1);
  const Ball b{{0.4, 0.55}, 0.2};
  const double p = 4.0 / 3.0;
  for (double lambda : {-3.0, 0.25, 7.5}) {
    const ScalarField lf = lambda * f;
    const double scale = std::pow(std::abs(lambda), p);
    CHECK(std::abs(morrey_J(lf, p, b) - scale * morrey_J(f, p, b)) <= 1e-13 * scale * morrey_J(f, p, b));
    const double M = morrey_M(f, p, {0.5, 0.5}, 0.2);
    CHECK(std::abs(morrey_M(lf, p, {0.5, 0.5}, 0.2) - scale * M) <= 1e-13 * scale * M);
  }
}

TEST_CASE("J carries the rho^(p - 2) weight") {
  const Grid g(128);
  const ScalarField one(g, 1.0);
  const Ball b{{0.5, 0.5}, 0.25};
  CHECK(morrey_J(one, 2.0, b) == doctest::Approx(lp_norm_on_ball(one, 2.0, b)).epsilon(1e-14));
  CHECK(morrey_J(one, 1.5, b) == doctest::Approx(std::pow(0.25, -0.5) * lp_norm_on_ball(one, 1.5, b)));
}

TEST_CASE("M dominates J on the same ball and grows with the radius") {
  const Grid g(64);
  const VecField v = grad(smooth_random(g, 2));
  const double p = 1.5;
  for (Vec2 y : {Vec2{0.5, 0.5}, Vec2{0.3, 0.6}}) {
    double prev = 0.0;
    for (double varrho : {0.0625, 0.125, 0.25}) {
      const double M = morrey_M(v, p, y, varrho);
      CHECK(M >= morrey_J(v, p, Ball{y, varrho}));
      // Dyadic radii give nested sampling families, so monotonicity is exact.
      CHECK(M >= prev);
      prev = M;
    }
  }
  CHECK_THROWS_AS(morrey_M(v, 0.5, {0.5, 0.5}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(morrey_M(v, 2.0, {0.5, 0.5}, 0.1, 0), std::invalid_argument);
}

TEST_CASE("EmptyBall from J on a sub-cell ball") {
  const Grid g(16);
  CHECK_THROWS_AS(morrey_J(ScalarField(g, 1.0), 2.0, Ball{{0.5, 0.5}, 1e-3}), EmptyBall);
}

TEST_CASE("smallness scan") {
  const Grid g(64);
  const SkewPotential zero(g, 3);
  const SmallnessScan z = smallness_scan(zero, 1e-3);
  CHECK(z.ok);
  CHECK(z.sup == 0.0);
  SkewPotential w = random_smooth_potential(3, g, 1.0, 4, 1);
  const SmallnessScan s = smallness_scan(w, 1e-3);
  CHECK_FALSE(s.ok);
  CHECK(s.argmax.inside_unit_square());
  // The supremum is quadratic in Omega.
  w *= 0.5;
  CHECK(smallness_scan(w, 1e-3).sup == doctest::Approx(0.25 * s.sup).epsilon(1e-13));
}

TEST_CASE("Hardy-BMO probe") {
  const Grid g(96);
  const Ball ball{{0.5, 0.5}, 0.2};
  const double p = 4.0 / 3.0;
  const VecField Gamma = perp_grad(smooth_random(g, 3));
  SUBCASE("constant a makes the integrand vanish") {
    const HardyBmoProbe pr = hardy_bmo_probe(ScalarField(g, 2.0), Gamma, ball_bump(g, ball), p, ball);
    CHECK(pr.lhs < 1e-12);
    CHECK(pr.degenerate);
    CHECK(pr.c_hat == 0.0);
  }
  SUBCASE("c = 0 gives lhs = 0") {
    const HardyBmoProbe pr = hardy_bmo_probe(smooth_random(g, 4), Gamma, ScalarField(g), p, ball);
    CHECK(pr.lhs == 0.0);
    CHECK(pr.degenerate);
  }
  SUBCASE("randomized divergence-free suite stays bounded") {
    double worst = 0.0;
    for (unsigned seed = 10; seed < 30; ++seed) {
      const VecField G = perp_grad(smooth_random(g, seed));
      const ScalarField a = smooth_random(g, seed + 100);
      const ScalarField c = ball_bump(g, ball);
      const HardyBmoProbe pr = hardy_bmo_probe(a, G, c, p, ball);
      REQUIRE_FALSE(pr.degenerate);
      CHECK(pr.div_gamma < 1e-9 * pr.gamma_norm * g.N());
      worst = std::max(worst, pr.c_hat);
    }
    CHECK(worst <= 10.0);
  }
}

TEST_CASE("decay experiment") {
  const Grid g(64);
  MorreyConfig cfg;
  SUBCASE("constant u is degenerate") {
    const std::vector<ScalarField> u{ScalarField(g, 1.0), ScalarField(g, 0.0), ScalarField(g, 0.0)};
    const DecayReport rep = decay_experiment(u, SkewPotential(g, 3), RotationField(g, 3), cfg);
    CHECK(rep.degenerate);
    for (const auto& e : rep.entries) CHECK(e.degenerate);
    CHECK(rep.fraction_at_most(0.6) == 1.0);
  }
  SUBCASE("ratios are invariant under scaling u") {
    const ProblemInstance prob = harmonic_problem(g, 3);
    const DecayReport a = decay_experiment(prob.u, prob.omega, RotationField(g, 3), cfg);
    std::vector<ScalarField> scaled;
    for (const auto& c : prob.u) scaled.push_back(3.0 * c);
    const DecayReport b = decay_experiment(scaled, prob.omega, RotationField(g, 3), cfg);
    REQUIRE(a.entries.size() == b.entries.size());
    REQUIRE_FALSE(a.entries.empty());
    for (std::size_t k = 0; k < a.entries.size(); ++k) {
      CHECK(a.entries[k].ratio == doctest::Approx(b.entries[k].ratio).epsilon(1e-12));
    }
  }
  SUBCASE("every R level holds entries with gamma R >= 1.5 h") {
    const ProblemInstance prob = harmonic_problem(g, 3);
    const DecayReport rep = decay_experiment(prob.u, prob.omega, RotationField(g, 3), cfg);
    bool top = false, second = false;
    for (const auto& e : rep.entries) {
      CHECK(cfg.gamma * e.R >= kMinInnerRadius * g.h());
      top = top || e.R == cfg.R_max;
      second = second || e.R == cfg.R_max / 2;
    }
    CHECK(top);
    CHECK(second);
    CHECK(rep.smallness.ok);
  }
}

TEST_CASE("Morrey config validation") {
  auto key_of = [](MorreyConfig c) {
    try {
      c.validate();
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string();
  };
  MorreyConfig c;
  CHECK(key_of(c).empty());
  c.gamma = 0.5;
  CHECK(key_of(c) == "gamma");
  c = {};
  c.p = 1.0;
  CHECK(key_of(c) == "p");
  c = {};
  c.p = 2.5;
  CHECK(key_of(c) == "p");
  c = {};
  c.epsilon = 0.0;
  CHECK(key_of(c) == "epsilon");
  c = {};
  c.R_max = 0.3;
  CHECK(key_of(c) == "R_max");
  c = {};
  c.R_levels = 0;
  CHECK(key_of(c) == "R_levels");
  c = {};
  c.center_stride = 0;
  CHECK(key_of(c) == "center_stride");
}
