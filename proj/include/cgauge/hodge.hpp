#pragma once

#include "cgauge/grid.hpp"

namespace cgauge {

/// V = grad f + perp_grad g + h with f = g = 0 on the boundary ring.
struct HodgeParts {
  ScalarField f;
  ScalarField g;
  VecField h;
  /// ||V - (grad f + perp_grad g + h)||_L2.
  double reconstruction_residual;
  /// ||div h|| and ||curl h|| over cells at least `kHodgeMargin` from the edge.
  double div_residual;
  double curl_residual;
};

inline constexpr double kHodgeMargin = 0.125;

HodgeParts hodge_decompose(const VecField& V);

struct GrowthCheck {
  double lhs;    ///< integral of |h|^p over B_r
  double rhs;    ///< integral of |h|^p over B_R
  double ratio;  ///< lhs / ((r/R)^2 rhs), 0 when degenerate
  bool degenerate;
};

/// Compares the two ball integrals of |h|^p against the (r/R)^2 scaling of
/// harmonic fields. Requires 0 < r < R and B_R(center) inside the square.
GrowthCheck harmonic_growth_check(const VecField& h, double p, Vec2 center, double r, double R);

}  // namespace cgauge
