#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cgauge/errors.hpp"
#include "cgauge/grid.hpp"
#include "support.hpp"

using namespace cgauge;
using std::numbers::pi;

TEST_CASE("grid rejects N below 4") {
  CHECK_THROWS_AS(Grid(3), std::invalid_argument);
  const Grid g(4);
  CHECK(g.h() * g.N() == 1.0);
}

TEST_CASE("grad of constant, affine and quadratic fields") {
  const Grid g(32);
  const VecField d0 = grad(ScalarField(g, 3.5));
  for (std::size_t c = 0; c < g.cells(); ++c) {
    CHECK(std::abs(d0[c][0]) < 1e-12);
    CHECK(std::abs(d0[c][1]) < 1e-12);
  }
  const VecField dx = grad(ScalarField::sample(g, [](double x, double) { return x; }));
  const VecField dq = grad(ScalarField::sample(g, [](double x, double y) { return x * x + y * y; }));
  for (int j = 0; j < g.N(); ++j) {
    for (int i = 0; i < g.N(); ++i) {
      const std::size_t c = g.index(i, j);
      CHECK(std::abs(dx[c][0] - 1.0) < 1e-13);
      CHECK(std::abs(dx[c][1]) < 1e-13);
      // One-sided stencils are second order too, so quadratics are exact everywhere.
      CHECK(std::abs(dq[c][0] - 2.0 * g.x(i)) < 1e-12);
      CHECK(std::abs(dq[c][1] - 2.0 * g.y(j)) < 1e-12);
    }
  }
}

TEST_CASE("perp_grad rotates grad and is discretely divergence free") {
  const Grid g(16);
  const VecField p = perp_grad(ScalarField::sample(g, [](double, double y) { return y; }));
  for (std::size_t c = 0; c < g.cells(); ++c) {
    CHECK(std::abs(p[c][0] + 1.0) < 1e-13);
    CHECK(std::abs(p[c][1]) < 1e-13);
  }
  auto f = [](double x, double y) { return std::sin(3 * x) * std::cos(2 * y) + x * x * y; };
  // The x and y stencils act on different indices, so they commute exactly.
  for (int N : testing::kRefinement) {
    const ScalarField d = div(perp_grad(ScalarField::sample(Grid(N), f)));
    CHECK(testing::max_abs(d.values()) < 1e-12 * N * N);
  }

  const Grid g2(32);
  const ScalarField s = ScalarField::sample(g2, f);
  const VecField a = grad(s), b = perp_grad(s);
  for (std::size_t c = 0; c < g2.cells(); ++c) CHECK(std::abs(a[c][0] * b[c][0] + a[c][1] * b[c][1]) < 1e-12);
}

TEST_CASE("div of constant and linear fields") {
  const Grid g(32);
  const ScalarField d0 = div(VecField(g, {1.0, 0.0}));
  CHECK(testing::max_abs(d0.values()) < 1e-12);
  const ScalarField d = div(VecField::sample(g, [](double x, double y) { return Vec2{x, y}; }));
  for (std::size_t c = 0; c < g.cells(); ++c) CHECK(std::abs(d[c] - 2.0) < 1e-12);
}

TEST_CASE("summation by parts for fields vanishing on three rings") {
  for (int N : {32, 64}) {
    const Grid g(N);
    const ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::exp(x) * std::cos(4 * y); });
    VecField V = VecField::sample(g, [](double x, double y) { return Vec2{std::sin(5 * x * y), x - y * y}; });
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        if (g.ring(i, j) < 3) V[g.index(i, j)] = {0.0, 0.0};
      }
    }
    const double r = inner(div(V), f) + inner(V, grad(f));
    // Central differences make the identity exact away from the boundary stencils.
    CHECK(std::abs(r) <= 1e-12 * l2_norm(V) * l2_norm(f));
  }
}

TEST_CASE("operators are linear") {
  const Grid g(24);
  const ScalarField a = testing::noise(g, 1), b = testing::noise(g, 2);
  const double al = 0.7, be = -1.3;
  const ScalarField comb = al * a + be * b;
  const VecField ga = grad(a), gb = grad(b), gc = grad(comb);
  const VecField pa = perp_grad(a), pb = perp_grad(b), pc = perp_grad(comb);
  const ScalarField sa = poisson_dirichlet(a), sb = poisson_dirichlet(b), sc = poisson_dirichlet(comb);
  const ScalarField da = div(ga), db = div(gb), dc = div(gc);
  double worst = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    for (int k = 0; k < 2; ++k) {
      worst = std::max(worst, std::abs(gc[c][k] - (al * ga[c][k] + be * gb[c][k])) / 48.0);
      worst = std::max(worst, std::abs(pc[c][k] - (al * pa[c][k] + be * pb[c][k])) / 48.0);
    }
    worst = std::max(worst, std::abs(dc[c] - (al * da[c] + be * db[c])) / (48.0 * 48.0));
    worst = std::max(worst, std::abs(sc[c] - (al * sa[c] + be * sb[c])));
  }
  // Derivative outputs are normalized by their 1/h and 1/h^2 scale.
  CHECK(worst < 1e-12);
}

TEST_CASE("poisson_dirichlet") {
  SUBCASE("zero right-hand side") {
    const ScalarField phi = poisson_dirichlet(ScalarField(Grid(32)));
    CHECK(testing::max_abs(phi.values()) == 0.0);
  }
  SUBCASE("inverts the five-point Laplacian on zero-boundary fields") {
    const Grid g(40);
    ScalarField psi = testing::noise(g, 7);
    for (int j = 0; j < g.N(); ++j) {
      for (int i = 0; i < g.N(); ++i) {
        if (g.ring(i, j) == 0) psi(i, j) = 0.0;
      }
    }
    const ScalarField back = poisson_dirichlet(laplacian5(psi));
    for (std::size_t c = 0; c < g.cells(); ++c) CHECK(std::abs(back[c] - psi[c]) < 1e-9);
  }
  SUBCASE("manufactured sine solution converges at second order") {
    // The boundary ring sits at cell centers h/2 from the edge, so the exact
    // solution is stretched to vanish there.
    const double order = testing::refinement_order([](int N) {
      const Grid g(N);
      const double h = g.h(), L = 1.0 - h;
      auto u = [&](double x, double y) { return std::sin(pi * (x - h / 2) / L) * std::sin(pi * (y - h / 2) / L); };
      const ScalarField rhs =
          ScalarField::sample(g, [&](double x, double y) { return -2.0 * pi * pi / (L * L) * u(x, y); });
      const ScalarField phi = poisson_dirichlet(rhs);
      double err = 0.0;
      for (int j = 0; j < N; ++j) {
        for (int i = 0; i < N; ++i) err = std::max(err, std::abs(phi(i, j) - u(g.x(i), g.y(j))));
      }
      return err;
    });
    CHECK(order >= 1.9);
  }
}

TEST_CASE("ball quadrature") {
  const Grid g(128);
  const Ball b{{0.5, 0.45}, 0.3};
  SUBCASE("unit density gives the disk area within O(h rho)") {
    const double area = lp_norm_on_ball(ScalarField(g, 1.0), 1.0, b);
    CHECK(std::abs(area - pi * 0.09) <= 4.0 * g.h() * b.radius);
  }
  SUBCASE("zero field integrates to zero") { CHECK(lp_norm_on_ball(ScalarField(g), 2.0, b) == 0.0); }
  SUBCASE("constant 2 with p = 2") {
    const double v = lp_norm_on_ball(ScalarField(g, 2.0), 2.0, b);
    CHECK(std::abs(v - 4.0 * pi * 0.09) <= 16.0 * g.h() * b.radius);
    const Ball corner{{0.0, 0.0}, 0.4};
    const double w = lp_norm_on_ball(ScalarField(g, 2.0), 2.0, corner);
    CHECK(std::abs(w - 4.0 * pi * 0.16 / 4.0) <= 16.0 * g.h() * corner.radius);
  }
  SUBCASE("empty ball") {
    CHECK_THROWS_AS(lp_norm_on_ball(ScalarField(g, 1.0), 1.0, Ball{{0.5, 0.5}, 1e-4}), EmptyBall);
  }
}

TEST_CASE("test bumps vanish on the three outer rings") {
  for (int N : {32, 64}) {
    const Grid g(N);
    const auto bumps = test_bumps(g);
    CHECK(bumps.size() == 16);
    for (const auto& phi : bumps) {
      for (int j = 0; j < N; ++j) {
        for (int i = 0; i < N; ++i) {
          if (g.ring(i, j) < 3) CHECK(phi(i, j) == 0.0);
        }
      }
    }
  }
}
