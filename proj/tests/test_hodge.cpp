#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cgauge/hodge.hpp"
#include "support.hpp"

using namespace cgauge;
using std::numbers::pi;

namespace {

Vec2 smooth_field(double x, double y) {
  return {std::sin(2 * x + y) + x * y * y, std::exp(0.5 * x) * std::cos(3 * y) - x};
}

double interior_vec_norm(const VecField& v, double margin) {
  ScalarField m(v.grid());
  for (std::size_t c = 0; c < v.grid().cells(); ++c) m[c] = std::hypot(v[c][0], v[c][1]);
  return interior_l2_norm(m, margin);
}

}  // namespace

TEST_CASE("decomposition reconstructs the input") {
  for (int N : {16, 48}) {
    const VecField V = VecField::sample(Grid(N), smooth_field);
    const HodgeParts parts = hodge_decompose(V);
    CHECK(parts.reconstruction_residual <= 1e-10 * l2_norm(V));
    const Grid& g = V.grid();
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        if (g.ring(i, j) == 0) {
          CHECK(parts.f(i, j) == 0.0);
          CHECK(parts.g(i, j) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("harmonic part is divergence and curl free to second order") {
  std::vector<double> dres, cres;
  const double div_order = testing::refinement_order([&](int N) {
    const HodgeParts parts = hodge_decompose(VecField::sample(Grid(N), smooth_field));
    cres.push_back(parts.curl_residual);
    return parts.div_residual;
  });
  const double curl_order = cgauge::fitted_order(std::vector<double>{1.0 / 32, 1.0 / 64, 1.0 / 128}, cres);
  CHECK(div_order >= 1.9);
  CHECK(curl_order >= 1.9);
}

TEST_CASE("gradients of boundary-vanishing potentials land in f") {
  // psi vanishes on the whole boundary, so grad psi has no harmonic part in the limit.
  auto psi = [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y) * (1.0 + x); };
  std::vector<double> herr, ferr;
  for (int N : testing::kRefinement) {
    const Grid g(N);
    const HodgeParts parts = hodge_decompose(grad(ScalarField::sample(g, psi)));
    herr.push_back(interior_vec_norm(parts.h, kHodgeMargin));
    ferr.push_back(interior_l2_norm(parts.g, kHodgeMargin));
  }
  const std::vector<double> hs{1.0 / 32, 1.0 / 64, 1.0 / 128};
  CHECK(herr.back() < 0.05);
  CHECK(cgauge::fitted_order(hs, herr) >= 0.9);
  CHECK(ferr.back() < 1e-12);
}

TEST_CASE("a harmonic gradient stays in h away from the boundary layer") {
  const Grid g(64);
  const VecField V = grad(ScalarField::sample(g, [](double x, double y) { return x * x - y * y; }));
  const HodgeParts parts = hodge_decompose(V);
  // div V is exactly zero for a quadratic and curl grad vanishes identically.
  CHECK(testing::max_abs(parts.f.values()) < 1e-10);
  CHECK(testing::max_abs(parts.g.values()) < 1e-10);
  CHECK(l2_norm(parts.h - V) < 1e-10);
}

TEST_CASE("harmonic growth check") {
  const Grid g(128);
  SUBCASE("constant fields scale like the area") {
    const GrowthCheck gc = harmonic_growth_check(VecField(g, {1.0, -2.0}), 4.0 / 3.0, {0.5, 0.5}, 0.1, 0.2);
    CHECK_FALSE(gc.degenerate);
    CHECK(gc.ratio == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("zero field is degenerate") {
    const GrowthCheck gc = harmonic_growth_check(VecField(g), 2.0, {0.5, 0.5}, 0.1, 0.2);
    CHECK(gc.degenerate);
    CHECK(gc.ratio == 0.0);
  }
  SUBCASE("invalid radii and balls leaving the square") {
    const VecField v(g, {1.0, 0.0});
    CHECK_THROWS_AS(harmonic_growth_check(v, 2.0, {0.5, 0.5}, 0.2, 0.2), std::invalid_argument);
    CHECK_THROWS_AS(harmonic_growth_check(v, 2.0, {0.5, 0.5}, -0.1, 0.2), std::invalid_argument);
    CHECK_THROWS_AS(harmonic_growth_check(v, 2.0, {0.1, 0.5}, 0.05, 0.2), std::invalid_argument);
  }
}
