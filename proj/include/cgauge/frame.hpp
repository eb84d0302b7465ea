#pragma once

// Metric frames and the first-order transformed system.
//
// Given a metric g on the target and a skew form b, the target system is
//   div(g(u) grad u)_i - 1/2 (d_i g_kl)(u) grad u^k . grad u^l
//       = Omega_ik . grad u^k + perp_grad(b_ik(u)) . grad u^k.
// With the frame e (e^T e = g), F = e g^-1 and xi^a = e_ak(u) grad u^k it
// becomes div xi = (omega + F Omega F^T + F perp_grad(b(u)) F^T) . xi.

#include <functional>
#include <span>
#include <vector>

#include "cgauge/grid.hpp"
#include "cgauge/lie_fields.hpp"

namespace cgauge {

using Point = std::span<const double>;

/// Sum of c * prod y_m^e_m.
struct Polynomial {
  struct Term {
    double coef;
    std::vector<int> exponents;
  };
  std::vector<Term> terms;

  double operator()(Point y) const;
  double derivative(Point y, int k) const;
};

struct MetricData {
  int n = 0;
  std::function<SmallMat(Point)> g;
  std::function<SmallMat(Point)> b;
  /// Optional analytic derivatives d/dy_k; central differences otherwise.
  std::function<SmallMat(Point, int)> dg;
  std::function<SmallMat(Point, int)> db;

  SmallMat metric(Point y) const;
  SmallMat skew(Point y) const;
  SmallMat metric_derivative(Point y, int k) const;
  SmallMat skew_derivative(Point y, int k) const;

  /// b(y) = B0 + sum_m y_m B_m with antisymmetric B's; empty means b = 0.
  struct AffineSkew {
    SmallMat B0;
    std::vector<SmallMat> slope;
  };

  static MetricData euclidean(int n, AffineSkew b = {});
  /// g = exp(2 phi) I.
  static MetricData conformal(int n, Polynomial phi, AffineSkew b = {});
  /// g = diag(p_1, ..., p_n).
  static MetricData diagonal(std::vector<Polynomial> diag, AffineSkew b = {});
};

/// Lower-triangular frame with e^T e = g; columns are the e_i.
class FrameData {
 public:
  explicit FrameData(MetricData metric) : metric_(std::move(metric)) {}

  const MetricData& metric() const noexcept { return metric_; }
  int n() const noexcept { return metric_.n; }

  /// Throws NotPositiveDefinite when a pivot is not positive.
  SmallMat e(Point y) const;
  /// d e / d y_k, exact given d g / d y_k.
  SmallMat de(Point y, int k) const;
  SmallMat inverse_metric(Point y) const;

 private:
  MetricData metric_;
};

FrameData build_frame(const MetricData& metric);

/// Gamma^i_kl = 1/2 g^ij (d_l g_jk + d_k g_jl - d_j g_kl), stored [(i * n + k) * n + l].
struct Christoffel {
  int n;
  std::vector<double> data;
  double operator()(int i, int k, int l) const { return data[(static_cast<std::size_t>(i) * n + k) * n + l]; }
};
Christoffel christoffel(const MetricData& metric, Point y);

struct TransformedSystem {
  /// A = e(u) per cell.
  MatrixField A;
  /// xi^a = A_ak grad u^k.
  std::vector<VecField> xi;
  /// F Omega F^T.
  SkewPotential omega_tilde;
  /// Frame-curvature part.
  SkewPotential omega;
  /// F perp_grad(b(u)) F^T.
  SkewPotential b_tilde;
  /// omega + omega_tilde + b_tilde.
  SkewPotential theta;
  /// ||grad u - F^T xi|| / ||grad u||.
  double inversion_residual;
  /// L2 norm of the symmetric part before antisymmetrization.
  double omega_defect;
  double omega_tilde_defect;
};

TransformedSystem assemble_transformed_system(const FrameData& frame, const SkewPotential& Omega,
                                              std::span<const ScalarField> u);

/// Weak residual of div xi = theta . xi against the test bumps:
/// sqrt(sum over bumps phi and a of (sum (-xi^a . grad phi - (theta xi)^a phi) h^2)^2).
double transformed_residual(const TransformedSystem& sys);

/// Residual of the original system in weak form, same norm as above.
double metric_system_residual(const MetricData& metric, const SkewPotential& Omega, std::span<const ScalarField> u);

}  // namespace cgauge
