#pragma once

// Manufactured instances of lap u = Omega . grad u and the Gruter functional.

#include <span>
#include <string>
#include <vector>

#include "cgauge/frame.hpp"
#include "cgauge/grid.hpp"
#include "cgauge/lie_fields.hpp"

namespace cgauge {

struct ProblemInstance {
  std::string generator;
  std::vector<ScalarField> u;
  SkewPotential omega;
  int degree = 0;
  double scale = 1.0;
  /// Expected order of the weak residual under refinement.
  double expected_order = 2.0;
};

inline constexpr Vec2 kMapCenter{0.5, 0.5};

/// Inverse stereographic projection of w = scale * (z - z0)^degree, z0 = (1/2, 1/2),
/// with Omega_ik = u^k grad u^i - u^i grad u^k from the analytic gradient.
ProblemInstance harmonic_map_s2(int degree, const Grid& grid, double scale = 1.0);

/// Polynomial harmonic u with Omega = 0 (n components, n >= 2).
ProblemInstance harmonic_problem(const Grid& grid, int n = 3);

/// Halves the scale of harmonic_map_s2 until the smallness scan passes at epsilon.
ProblemInstance dilate_to_smallness(int degree, const Grid& grid, double epsilon, double start_scale = 1.0);

/// Weak residual of lap u^i = Omega_ik . grad u^k against the test bumps:
/// sqrt of the sum over bumps and i of (sum (-grad u^i . grad phi - Omega_ik . grad u^k phi) h^2)^2.
double equation_residual(std::span<const ScalarField> u, const SkewPotential& omega);

/// sum over cells of g_ij(v) Dv^i . Dv^j + b_ij(v) det(Dv^i, Dv^j), times h^2.
double gruter_functional(const MetricData& metric, std::span<const ScalarField> v);

/// Exact derivative of gruter_functional at v along phi e_j.
double gruter_variation(const MetricData& metric, std::span<const ScalarField> v, const ScalarField& phi, int j);

/// sqrt of the sum over test bumps phi and components j of gruter_variation^2.
double el_residual(const MetricData& metric, std::span<const ScalarField> v);

/// max over the values taken by v of max(lambda_max + |b|, 1 / (lambda_min - |b|)).
/// Throws NotPositiveDefinite when lambda_min <= |b| somewhere.
double ellipticity_constant(const MetricData& metric, std::span<const ScalarField> v);

/// Discrete Dirichlet energy sum |Dv|^2 h^2.
double dirichlet_energy(std::span<const ScalarField> v);

}  // namespace cgauge
