#pragma once

// Variational gauge fixing: minimize E(Q) = sum |Q^T dQ - Q^T Omega Q|^2 h^2
// over rotation fields and certify the resulting conservation law.

#include <string>
#include <vector>

#include "cgauge/grid.hpp"
#include "cgauge/lie_fields.hpp"

namespace cgauge {

enum class GaugeMode { FreeBoundary, DirichletIdentity };

enum class Termination { GradientTolerance, EnergyStall, MaxIterations, LineSearchFailed };

std::string to_string(GaugeMode mode);
std::string to_string(Termination t);

struct GaugeOptions {
  GaugeMode mode = GaugeMode::FreeBoundary;
  int max_iterations = 2000;
  /// Stop when ||G|| <= grad_tol * (1 + ||Omega||).
  double grad_tol = 1e-8;
  /// Stall when the relative energy decrease over `stall_window` iterations is below this.
  double energy_tol = 1e-12;
  int stall_window = 20;
  double initial_step = 1.0;
  double backtracking = 0.5;
  double armijo = 1e-4;
  /// Shift mu of the (D^T D + mu) preconditioner.
  double preconditioner_shift = 1e-2;
  int threads = 1;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// One so(n) matrix per cell, strict upper triangle stored.
class SkewScalarField {
 public:
  SkewScalarField(const Grid& grid, int n);

  const Grid& grid() const noexcept { return grid_; }
  int n() const noexcept { return n_; }
  int dim() const noexcept { return m_; }

  std::span<double> upper(std::size_t c) { return {data_.data() + c * m_, static_cast<std::size_t>(m_)}; }
  std::span<const double> upper(std::size_t c) const { return {data_.data() + c * m_, static_cast<std::size_t>(m_)}; }
  SmallMat matrix(std::size_t c) const { return skew_from_upper(n_, upper(c)); }
  /// Entry (s, t), s < t, as a scalar field.
  ScalarField component(int s, int t) const;
  std::span<const double> raw() const noexcept { return data_; }
  std::span<double> raw() noexcept { return data_; }

 private:
  Grid grid_;
  int n_;
  std::size_t m_;
  std::vector<double> data_;
};

/// sqrt(sum |G|_HS^2 h^2).
double l2_norm(const SkewScalarField& G);

/// E(Q) = sum |Omega^Q|^2 h^2, compensated.
double energy(const RotationField& Q, const SkewPotential& omega);

/// Energy and the discrete Euler-Lagrange field G, defined so that for any
/// skew field A = phi * alpha, d/de E(Q exp(e A)) at e = 0 equals
/// -2 sum <G, A>_HS h^2. G approximates div(Omega^Q).
struct EnergyGradient {
  double energy;
  SkewScalarField G;
};
EnergyGradient energy_gradient(const RotationField& Q, const SkewPotential& omega);

/// sum phi <G, alpha>_HS h^2.
double pairing(const SkewScalarField& G, const ScalarField& phi, const SmallMat& alpha);

struct EulerLagrangeResidual {
  SkewScalarField G;
  double l2;
  /// max over test bumps phi and s < t of |sum G_st phi h^2|.
  double weak;
  /// max over the same family of |sum (Omega^P)_st . grad phi h^2|; differs
  /// from `weak` by the discrete product-rule error.
  double weak_flux;
};
EulerLagrangeResidual euler_lagrange_residual(const RotationField& P, const SkewPotential& omega);

struct GaugeResult {
  RotationField P;
  SkewPotential omega_P;
  std::vector<double> energies;
  /// ||G|| per iterate.
  std::vector<double> residuals;
  double weak_residual = 0.0;
  double grad_P_norm = 0.0;
  double omega_P_norm = 0.0;
  double omega_norm = 0.0;
  /// Norm of the symmetric part of P^T dP discarded by the gauge action.
  double symmetric_defect = 0.0;
  int iterations = 0;
  bool converged = false;
  Termination termination = Termination::MaxIterations;
};

/// Preconditioned Riemannian descent from P = I.
GaugeResult minimize(const SkewPotential& omega, const GaugeOptions& opts = {});

/// Abelian reference solution for n = 2: P = exp(phi J) with phi the discrete
/// minimizer of E over the abelian class, mean zero.
RotationField oracle_n2(const SkewPotential& omega);

/// Constant R minimizing ||A R - B||_L2, and the resulting distance.
struct Alignment {
  SmallMat R;
  double distance;
};
Alignment align_right(const RotationField& A, const RotationField& B);

}  // namespace cgauge
