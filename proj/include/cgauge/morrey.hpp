#pragma once

// Morrey quantities J_p and M_p, the Hardy-BMO probe and the decay experiment.
//
// m is the domain dimension; every kernel runs with m = 2 but the exponents
// are written in terms of it.

#include <span>
#include <vector>

#include "cgauge/grid.hpp"
#include "cgauge/lie_fields.hpp"

namespace cgauge {

inline constexpr int kDomainDim = 2;

/// Decay pairs need gamma R >= kMinInnerRadius * h.
inline constexpr double kMinInnerRadius = 1.5;

struct MorreyConfig {
  double p = 4.0 / 3.0;
  double gamma = 0.25;
  double epsilon = 1e-3;
  /// Largest R in the decay ladder R_max, R_max / 2, ...
  double R_max = 0.2;
  int R_levels = 2;
  /// Lattice stride (in cells) of the decay centers z.
  int center_stride = 2;
  /// Lattice stride (in cells) of the sub-ball centers inside M_p.
  int sub_stride = 2;
  int threads = 1;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// rho^(p - m) * integral over B of |f|^p; `magnitude` holds |f| per cell.
double morrey_J(const Grid& grid, std::span<const double> magnitude, double p, const Ball& ball);
double morrey_J(const ScalarField& f, double p, const Ball& ball);
double morrey_J(const VecField& f, double p, const Ball& ball);

/// Sampled sup of J_p over balls B_rho(x) inside B_varrho(y). Centers are y and
/// the cell centers whose indices are multiples of `sub_stride`; radii are
/// varrho 2^-k down to 4h (varrho itself is always included). For dyadically
/// related radii the families are nested.
double morrey_M(const Grid& grid, std::span<const double> magnitude, double p, Vec2 y, double varrho,
                int sub_stride = 2);
double morrey_M(const ScalarField& f, double p, Vec2 y, double varrho, int sub_stride = 2);
double morrey_M(const VecField& f, double p, Vec2 y, double varrho, int sub_stride = 2);

/// sup over balls B_r(x) inside the square of r^(2 - m) * integral |Omega|^2,
/// sampled at maximal balls centered on a lattice of the given stride.
struct SmallnessScan {
  double sup;
  Ball argmax;
  bool ok;
};
SmallnessScan smallness_scan(const SkewPotential& omega, double epsilon, int stride = 2);

struct HardyBmoProbe {
  double lhs;              ///< |integral over B of (grad a . Gamma) c|
  double gamma_norm;       ///< ||Gamma||_L2(B)
  double grad_c_norm;      ///< ||grad c||_L2(B)
  double morrey_factor;    ///< M_p(y, 2 varrho; grad a)^(1/p)
  double c_hat;            ///< lhs / product, 0 when degenerate
  double div_gamma;        ///< ||div Gamma||_L2(B)
  bool degenerate;
};
HardyBmoProbe hardy_bmo_probe(const ScalarField& a, const VecField& Gamma, const ScalarField& c, double p,
                              const Ball& ball, int sub_stride = 2);

struct DecayEntry {
  Vec2 center;
  double R;
  double J_gammaR;
  double M_2R;
  double ratio;
  bool smallness_ok;
  /// Hodge split of P^T grad u over B_2R(z): (gamma/2)^m int |grad u|^p,
  /// int |grad f|^p and int |grad g|^p.
  double harmonic_term;
  double f_term;
  double g_term;
  bool degenerate;
};

struct DecayReport {
  std::vector<DecayEntry> entries;
  SmallnessScan smallness;
  /// True when every M_2R vanished.
  bool degenerate;
  /// Fraction of non-degenerate entries with ratio <= bound.
  double fraction_at_most(double bound) const;
  double max_ratio() const;
};

/// Runs the half-decay experiment for u (components) with gauge P.
DecayReport decay_experiment(std::span<const ScalarField> u, const SkewPotential& omega, const RotationField& P,
                             const MorreyConfig& cfg);

/// Rows (P^T grad u)_i = sum_k P_ki grad u^k.
std::vector<VecField> gauged_gradient(std::span<const ScalarField> u, const RotationField& P);

}  // namespace cgauge
