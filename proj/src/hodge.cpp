#include "cgauge/hodge.hpp"

#include <cmath>
#include <stdexcept>

namespace cgauge {

HodgeParts hodge_decompose(const VecField& V) {
  ScalarField f = poisson_dirichlet(div(V));
  ScalarField g = poisson_dirichlet(curl(V));
  VecField h = V - grad(f) - perp_grad(g);
  const VecField rebuilt = grad(f) + perp_grad(g) + h;
  const double rec = l2_norm(V - rebuilt);
  const double dres = interior_l2_norm(div(h), kHodgeMargin);
  const double cres = interior_l2_norm(curl(h), kHodgeMargin);
  return {std::move(f), std::move(g), std::move(h), rec, dres, cres};
}

GrowthCheck harmonic_growth_check(const VecField& h, double p, Vec2 center, double r, double R) {
  if (!(r > 0.0 && r < R)) throw std::invalid_argument("harmonic_growth_check: need 0 < r < R");
  const Ball outer{center, R};
  if (!outer.inside_unit_square()) throw std::invalid_argument("harmonic_growth_check: B_R leaves the square");
  const auto mag = magnitude(h);
  const double lhs = lp_norm_on_ball(h.grid(), mag, p, Ball{center, r});
  const double rhs = lp_norm_on_ball(h.grid(), mag, p, outer);
  if (rhs == 0.0) return {lhs, rhs, 0.0, true};
  const double q = r / R;
  return {lhs, rhs, lhs / (q * q * rhs), false};
}

}  // namespace cgauge
