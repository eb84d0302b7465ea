#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "cgauge/errors.hpp"
#include "cgauge/morrey.hpp"
#include "cgauge/problem.hpp"
#include "support.hpp"

using namespace cgauge;

namespace {

MetricData::AffineSkew constant_b12(double value) {
  MetricData::AffineSkew b;
  b.B0 = SmallMat::Zero(2, 2);
  b.B0(0, 1) = value;
  b.B0(1, 0) = -value;
  return b;
}

}  // namespace

TEST_CASE("harmonic map to the sphere") {
  for (int degree : {1, 2, 3}) {
    const Grid g(32);
    const ProblemInstance p = harmonic_map_s2(degree, g, 0.8);
    CHECK(p.u.size() == 3);
    CHECK(p.degree == degree);
    double worst = 0.0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
      const double r2 = p.u[0][c] * p.u[0][c] + p.u[1][c] * p.u[1][c] + p.u[2][c] * p.u[2][c];
      worst = std::max(worst, std::abs(r2 - 1.0));
    }
    CHECK(worst <= 1e-14);
  }
  CHECK_THROWS_AS(harmonic_map_s2(0, Grid(8)), std::invalid_argument);
  CHECK_THROWS_AS(harmonic_map_s2(4, Grid(8)), std::invalid_argument);
}

TEST_CASE("equation residual of the degree-1 map converges at second order") {
  const double order = testing::refinement_order([](int N) {
    const ProblemInstance p = harmonic_map_s2(1, Grid(N), 1.0);
    return equation_residual(p.u, p.omega);
  });
  CHECK(order >= 1.9);
}

TEST_CASE("u . grad u vanishes to second order on the sphere") {
  std::vector<double> err;
  for (int N : testing::kRefinement) {
    const Grid g(N);
    const ProblemInstance p = harmonic_map_s2(2, g, 1.0);
    std::vector<VecField> du;
    for (const auto& comp : p.u) du.push_back(grad(comp));
    double worst = 0.0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
      for (int dir = 0; dir < 2; ++dir) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += p.u[k][c] * du[k][c][dir];
        worst = std::max(worst, std::abs(s));
      }
    }
    err.push_back(worst);
  }
  CHECK(err.back() < 1e-2);
  CHECK(cgauge::fitted_order(std::vector<double>{1.0 / 32, 1.0 / 64, 1.0 / 128}, err) >= 1.9);
}

TEST_CASE("dilating the map scales Omega") {
  // On N = 64, cell i maps to cell 32 + i of N = 128 under x -> 1/2 + (x - 1/2) / 2.
  const ProblemInstance half = harmonic_map_s2(1, Grid(64), 0.5);
  const ProblemInstance full = harmonic_map_s2(1, Grid(128), 1.0);
  const Grid g(64), G(128);
  double worst_u = 0.0, worst_w = 0.0;
  for (int j = 0; j < 64; ++j) {
    for (int i = 0; i < 64; ++i) {
      const std::size_t c = g.index(i, j), C = G.index(32 + i, 32 + j);
      for (int k = 0; k < 3; ++k) worst_u = std::max(worst_u, std::abs(half.u[k][c] - full.u[k][C]));
      for (int dir = 0; dir < 2; ++dir) {
        for (int a = 0; a < 3; ++a) {
          for (int b = a + 1; b < 3; ++b) {
            worst_w = std::max(worst_w, std::abs(half.omega.get(c, dir, a, b) - 0.5 * full.omega.get(C, dir, a, b)));
          }
        }
      }
    }
  }
  CHECK(worst_u < 1e-14);
  CHECK(worst_w < 1e-13);
}

TEST_CASE("dilate_to_smallness reaches the smallness level") {
  const Grid g(64);
  const ProblemInstance p = dilate_to_smallness(1, g, 1e-3);
  CHECK(smallness_scan(p.omega, 1e-3).ok);
  CHECK(p.scale < 1.0);
  CHECK_FALSE(smallness_scan(harmonic_map_s2(1, g, 2.0 * p.scale).omega, 1e-3).ok);
}

TEST_CASE("harmonic problem") {
  const ProblemInstance p = harmonic_problem(Grid(32), 4);
  CHECK(p.u.size() == 4);
  CHECK(l2_norm(p.omega) == 0.0);
  // The wide discrete Laplacian annihilates harmonic cubics, so the residual is roundoff.
  for (int N : testing::kRefinement) {
    const ProblemInstance q = harmonic_problem(Grid(N), 3);
    CHECK(equation_residual(q.u, q.omega) < 1e-14);
  }
  CHECK_THROWS_AS(harmonic_problem(Grid(8), 1), std::invalid_argument);
}

TEST_CASE("equation residual is invariant under constant shifts") {
  const ProblemInstance p = harmonic_map_s2(1, Grid(32), 0.7);
  std::vector<ScalarField> shifted;
  for (const auto& comp : p.u) shifted.push_back(comp + ScalarField(comp.grid(), 3.0));
  const double r = equation_residual(p.u, p.omega);
  CHECK(equation_residual(shifted, p.omega) == doctest::Approx(r).epsilon(1e-9));
  CHECK_THROWS_AS(equation_residual(std::span<const ScalarField>(p.u).first(2), p.omega), DimensionMismatch);
}

TEST_CASE("Gruter functional") {
  const Grid g(32);
  const std::vector<ScalarField> v{ScalarField::sample(g, [](double x, double) { return x; }),
                                   ScalarField::sample(g, [](double, double y) { return y; })};
  SUBCASE("Euclidean metric without b is the Dirichlet energy") {
    const ProblemInstance p = harmonic_map_s2(1, g, 0.9);
    CHECK(gruter_functional(MetricData::euclidean(3), p.u) ==
          doctest::Approx(dirichlet_energy(p.u)).epsilon(1e-14));
    CHECK(dirichlet_energy(v) == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("the identity map picks up 2 b12 from the determinant term") {
    const double b12 = 0.37;
    const double F = gruter_functional(MetricData::euclidean(2, constant_b12(b12)), v);
    CHECK(F == doctest::Approx(2.0 + 2.0 * b12).epsilon(1e-14));
  }
  SUBCASE("constant shifts leave the functional unchanged for constant coefficients") {
    std::vector<ScalarField> w;
    for (const auto& comp : v) w.push_back(comp + ScalarField(g, -1.5));
    const MetricData m = MetricData::euclidean(2, constant_b12(0.2));
    CHECK(gruter_functional(m, w) == doctest::Approx(gruter_functional(m, v)).epsilon(1e-13));
  }
}

TEST_CASE("Gruter variation matches finite differences") {
  const Grid g(24);
  const MetricData m = MetricData::conformal(
      3, Polynomial{{{0.2, {1, 0, 0}}, {-0.1, {0, 1, 1}}}},
      MetricData::AffineSkew{SmallMat::Zero(3, 3), {SmallMat::Zero(3, 3), SmallMat::Zero(3, 3), [] {
                                                      SmallMat B = SmallMat::Zero(3, 3);
                                                      B(0, 1) = 0.3;
                                                      B(1, 0) = -0.3;
                                                      return B;
                                                    }()}});
  const ProblemInstance p = harmonic_map_s2(1, g, 0.6);
  for (int j = 0; j < 3; ++j) {
    const ScalarField phi = testing::noise(g, 20 + j);
    const double eps = 1e-6;
    auto moved = [&](double e) {
      std::vector<ScalarField> w = p.u;
      w[j] += e * phi;
      return gruter_functional(m, w);
    };
    const double fd = (moved(eps) - moved(-eps)) / (2.0 * eps);
    const double exact = gruter_variation(m, p.u, phi, j);
    CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("Euler-Lagrange residual separates harmonic data from noise") {
  const Grid g(64);
  const MetricData m = MetricData::euclidean(3);
  const ProblemInstance p = harmonic_problem(g, 3);
  std::vector<ScalarField> noisy = p.u;
  for (int k = 0; k < 3; ++k) noisy[k] += 0.01 * testing::noise(g, 40 + k);
  const double clean = el_residual(m, p.u);
  CHECK(clean < 1e-4);
  CHECK(el_residual(m, noisy) > 100.0 * clean);
}

TEST_CASE("ellipticity constant") {
  const Grid g(16);
  const ProblemInstance p = harmonic_map_s2(1, g, 0.5);
  CHECK(ellipticity_constant(MetricData::euclidean(3), p.u) == 1.0);
  // |u| = 1, so phi = 0.5 u_0 ranges inside [-0.5, 0.5] and g = exp(2 phi) I.
  const MetricData conf = MetricData::conformal(3, Polynomial{{{0.5, {1, 0, 0}}}});
  const double L = ellipticity_constant(conf, p.u);
  CHECK(L >= 1.0);
  CHECK(L <= std::exp(1.0) + 1e-12);
  MetricData::AffineSkew big;
  big.B0 = SmallMat::Zero(3, 3);
  big.B0(0, 1) = 2.0;
  big.B0(1, 0) = -2.0;
  CHECK_THROWS_AS(ellipticity_constant(MetricData::euclidean(3, big), p.u), NotPositiveDefinite);
  MetricData::AffineSkew small;
  small.B0 = SmallMat::Zero(3, 3);
  small.B0(0, 1) = 0.5;
  small.B0(1, 0) = -0.5;
  CHECK(ellipticity_constant(MetricData::euclidean(3, small), p.u) == doctest::Approx(2.0));
}
