#include <doctest.h>

#include <cmath>

#include "cgauge/coulomb_gauge.hpp"
#include "cgauge/errors.hpp"
#include "support.hpp"

using namespace cgauge;

namespace {

/// Omega = dR R^T, antisymmetrized, for R = exp(A(x)) with smooth A.
SkewPotential pure_gauge(const RotationField& R) {
  const Grid& g = R.grid();
  SkewPotential omega(g, R.n());
  for (int k = 0; k < 2; ++k) {
    const MatrixField dR = partial(R, k);
    for (std::size_t c = 0; c < g.cells(); ++c) omega.set_matrix(c, k, dR.at(c) * R.at(c).transpose());
  }
  return omega;
}

bool non_increasing(const std::vector<double>& e) {
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (e[i] > e[i - 1]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("zero potential gives the identity without iterating") {
  const GaugeResult r = minimize(SkewPotential(Grid(16), 3));
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  CHECK(r.termination == Termination::GradientTolerance);
  CHECK(r.P == RotationField(Grid(16), 3));
  CHECK(r.energies.size() == 1);
  CHECK(r.energies[0] == 0.0);
  CHECK(r.grad_P_norm == 0.0);
}

TEST_CASE("energy equals ||Omega||^2 at the identity") {
  const SkewPotential omega = random_smooth_potential(3, Grid(32), 0.7, 4, 5);
  CHECK(energy(RotationField(Grid(32), 3), omega) == doctest::Approx(0.49).epsilon(1e-12));
}

TEST_CASE("descent is monotone and stays below the starting energy") {
  for (int n : {2, 3, 4}) {
    const SkewPotential omega = random_smooth_potential(n, Grid(32), 1.0, 4, static_cast<std::uint64_t>(n));
    const GaugeResult r = minimize(omega);
    CHECK(r.converged);
    CHECK(non_increasing(r.energies));
    CHECK(r.energies.back() <= r.omega_norm * r.omega_norm + 1e-9);
    CHECK(r.energies.back() == doctest::Approx(r.omega_P_norm * r.omega_P_norm).epsilon(1e-10));
    CHECK(validate_rotation(r.P).ok);
    CHECK(r.residuals.back() <= 1e-8 * (1.0 + r.omega_norm));
  }
}

TEST_CASE("pure-gauge potentials are gauged away") {
  const Grid g(32);
  const RotationField R = random_rotation_field(3, g, 0.8, 4);
  const SkewPotential omega = pure_gauge(R);
  const GaugeResult r = minimize(omega);
  CHECK(r.converged);
  // Only the discrete product-rule defect of dR R^T survives.
  CHECK(r.energies.back() <= 1e-3 * r.omega_norm * r.omega_norm);
  CHECK(energy(R, omega) <= 1e-3 * r.omega_norm * r.omega_norm);
}

TEST_CASE("first variation matches finite differences") {
  const Grid g(24);
  const SkewPotential omega = random_smooth_potential(3, g, 1.0, 4, 8);
  const RotationField Q = random_rotation_field(3, g, 0.5, 2);
  const EnergyGradient eg = energy_gradient(Q, omega);
  CHECK(eg.energy == doctest::Approx(energy(Q, omega)).epsilon(1e-14));
  for (unsigned trial = 0; trial < 5; ++trial) {
    const ScalarField phi = testing::noise(g, 100 + trial);
    std::mt19937_64 rng(trial);
    std::normal_distribution<double> d;
    std::vector<double> up(3);
    for (double& v : up) v = d(rng);
    const SmallMat alpha = skew_from_upper(3, up);
    const double eps = 1e-5;
    auto shifted = [&](double e) {
      RotationField Qe(g, 3, false);
      for (std::size_t c = 0; c < g.cells(); ++c) Qe.set(c, Q.at(c) * skew_exp(e * phi[c] * alpha));
      return energy(Qe, omega);
    };
    const double fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
    const double exact = -2.0 * pairing(eg.G, phi, alpha);
    CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("n = 2 minimizer agrees with the abelian oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const SkewPotential omega = random_smooth_potential(2, Grid(32), 1.0, 4, seed);
    const GaugeResult r = minimize(omega);
    REQUIRE(r.converged);
    const RotationField ref = oracle_n2(omega);
    CHECK(align_right(r.P, ref).distance <= 1e-6);
    CHECK(energy(ref, omega) == doctest::Approx(r.energies.back()).epsilon(1e-8));
  }
  CHECK_THROWS_AS(oracle_n2(SkewPotential(Grid(8), 3)), DimensionMismatch);
}

TEST_CASE("align_right removes a constant rotation") {
  const Grid g(16);
  const RotationField A = random_rotation_field(3, g, 0.7, 1);
  const SmallMat R = random_rotation(3, 6);
  const Alignment al = align_right(A, right_multiply(A, R));
  CHECK(al.distance < 1e-12);
  CHECK((al.R - R).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Dirichlet mode keeps the boundary ring at the identity") {
  const Grid g(24);
  const SkewPotential omega = random_smooth_potential(3, g, 1.0, 4, 3);
  GaugeOptions opts;
  opts.mode = GaugeMode::DirichletIdentity;
  opts.max_iterations = 200;
  const GaugeResult r = minimize(omega, opts);
  CHECK(non_increasing(r.energies));
  CHECK(r.energies.back() < r.energies.front());
  for (int j = 0; j < g.N(); ++j) {
    for (int i = 0; i < g.N(); ++i) {
      if (g.ring(i, j) != 0) continue;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) CHECK(r.P.entry(g.index(i, j), a, b) == (a == b ? 1.0 : 0.0));
      }
    }
  }
  // The free-boundary minimum is lower since it ranges over a larger class.
  CHECK(minimize(omega).energies.back() <= r.energies.back() + 1e-12);
}

TEST_CASE("max_iterations = 0 stops at the start") {
  GaugeOptions opts;
  opts.max_iterations = 0;
  const GaugeResult r = minimize(random_smooth_potential(3, Grid(16), 1.0, 4, 1), opts);
  CHECK_FALSE(r.converged);
  CHECK(r.termination == Termination::MaxIterations);
  CHECK(r.iterations == 0);
}

TEST_CASE("option validation names the key") {
  auto key_of = [](GaugeOptions o) {
    try {
      o.validate();
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string();
  };
  GaugeOptions o;
  CHECK(key_of(o).empty());
  o.grad_tol = 0.0;
  CHECK(key_of(o) == "grad_tol");
  o = {};
  o.backtracking = 1.0;
  CHECK(key_of(o) == "backtracking");
  o = {};
  o.armijo = 0.0;
  CHECK(key_of(o) == "armijo");
  o = {};
  o.stall_window = 0;
  CHECK(key_of(o) == "stall_window");
  o = {};
  o.max_iterations = -1;
  CHECK(key_of(o) == "max_iterations");
  o = {};
  o.preconditioner_shift = -1.0;
  CHECK(key_of(o) == "preconditioner_shift");
  o = {};
  o.threads = 0;
  CHECK(key_of(o) == "threads");
}

TEST_CASE("threads do not change the result") {
  const SkewPotential omega = random_smooth_potential(3, Grid(32), 1.0, 4, 12);
  GaugeOptions opts;
  const GaugeResult a = minimize(omega, opts);
  opts.threads = 4;
  const GaugeResult b = minimize(omega, opts);
  CHECK(a.P == b.P);
  CHECK(a.energies == b.energies);
}
