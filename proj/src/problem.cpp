#include "cgauge/problem.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "cgauge/errors.hpp"
#include "cgauge/morrey.hpp"
#include "cgauge/numeric.hpp"

namespace cgauge {

namespace {

std::complex<double> ipow(std::complex<double> z, int k) {
  std::complex<double> out(1.0, 0.0);
  for (int i = 0; i < k; ++i) out *= z;
  return out;
}

}  // namespace

ProblemInstance harmonic_map_s2(int degree, const Grid& grid, double scale) {
  if (degree < 1 || degree > 3) throw std::invalid_argument("harmonic_map_s2: degree must be 1, 2 or 3");
  using cd = std::complex<double>;
  const std::size_t cells = grid.cells();
  std::vector<ScalarField> u(3, ScalarField(grid));
  std::vector<VecField> du(3, VecField(grid));
  for (int j = 0; j < grid.N(); ++j) {
    for (int i = 0; i < grid.N(); ++i) {
      const std::size_t c = grid.index(i, j);
      const cd z(grid.x(i) - kMapCenter[0], grid.y(j) - kMapCenter[1]);
      const cd w = scale * ipow(z, degree);
      const cd wp = scale * static_cast<double>(degree) * ipow(z, degree - 1);
      const double a = w.real(), b = w.imag();
      const double D = 1.0 + a * a + b * b;
      const double D2 = D * D;
      u[0][c] = 2.0 * a / D;
      u[1][c] = 2.0 * b / D;
      u[2][c] = (a * a + b * b - 1.0) / D;
      // d/da and d/db of the three components.
      const double da[3] = {2.0 / D - 4.0 * a * a / D2, -4.0 * a * b / D2, 4.0 * a / D2};
      const double db[3] = {-4.0 * a * b / D2, 2.0 / D - 4.0 * b * b / D2, 4.0 * b / D2};
      // w_x = w', w_y = i w'.
      const cd wx = wp, wy = cd(0.0, 1.0) * wp;
      for (int k = 0; k < 3; ++k) {
        du[k][c] = {da[k] * wx.real() + db[k] * wx.imag(), da[k] * wy.real() + db[k] * wy.imag()};
      }
    }
  }
  SkewPotential omega(grid, 3);
  for (std::size_t c = 0; c < cells; ++c) {
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b) {
        for (int dir = 0; dir < 2; ++dir) omega.set(c, dir, a, b, u[b][c] * du[a][c][dir] - u[a][c] * du[b][c][dir]);
      }
    }
  }
  ProblemInstance out{"harmonic_map_s2", std::move(u), std::move(omega), degree, scale, 2.0};
  return out;
}

ProblemInstance harmonic_problem(const Grid& grid, int n) {
  if (n < 2) throw std::invalid_argument("harmonic_problem: n must be >= 2");
  std::vector<ScalarField> u;
  for (int k = 0; k < n; ++k) {
    u.push_back(ScalarField::sample(grid, [k](double x, double y) {
      const double X = x - kMapCenter[0], Y = y - kMapCenter[1];
      switch (k % 3) {
        case 0:
          return X * X - Y * Y + 0.5 * X + 0.1 * k;
        case 1:
          return 2.0 * X * Y + 0.5 * Y;
        default:
          return X * X * X - 3.0 * X * Y * Y + 0.3 * X - 0.2 * Y;
      }
    }));
  }
  return ProblemInstance{"harmonic", std::move(u), SkewPotential(grid, n), 0, 1.0, 2.0};
}

ProblemInstance dilate_to_smallness(int degree, const Grid& grid, double epsilon, double start_scale) {
  double s = start_scale;
  for (int it = 0; it < 60; ++it, s *= 0.5) {
    ProblemInstance p = harmonic_map_s2(degree, grid, s);
    if (smallness_scan(p.omega, epsilon).ok) return p;
  }
  throw Error("dilate_to_smallness: no scale reached the smallness level");
}

double equation_residual(std::span<const ScalarField> u, const SkewPotential& omega) {
  const Grid& grid = omega.grid();
  const int n = omega.n();
  if (static_cast<int>(u.size()) != n) throw DimensionMismatch("equation_residual: component count differs from n");
  std::vector<VecField> du;
  for (const auto& comp : u) du.push_back(grad(comp));
  std::vector<ScalarField> source(static_cast<std::size_t>(n), ScalarField(grid));
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) {
        for (int dir = 0; dir < 2; ++dir) s += omega.get(c, dir, i, k) * du[k][c][dir];
      }
      source[i][c] = s;
    }
  }
  CompensatedSum total;
  for (const auto& phi : test_bumps(grid)) {
    const VecField dphi = grad(phi);
    for (int i = 0; i < n; ++i) {
      const double r = -inner(du[i], dphi) - inner(source[i], phi);
      total.add(r * r);
    }
  }
  return std::sqrt(total.value());
}

namespace {

double det2(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }
double dot2(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }

struct Sampled {
  std::vector<VecField> dv;
  int n;
};

Sampled prepare(const MetricData& metric, std::span<const ScalarField> v) {
  if (static_cast<int>(v.size()) != metric.n) throw DimensionMismatch("gruter: component count differs from metric n");
  Sampled s{{}, metric.n};
  for (const auto& comp : v) s.dv.push_back(grad(comp));
  return s;
}

std::vector<double> values_at(std::span<const ScalarField> v, std::size_t c) {
  std::vector<double> y(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) y[k] = v[k][c];
  return y;
}

}  // namespace

double gruter_functional(const MetricData& metric, std::span<const ScalarField> v) {
  const Sampled s = prepare(metric, v);
  const Grid& grid = v.front().grid();
  const int n = s.n;
  CompensatedSum sum;
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const auto y = values_at(v, c);
    const SmallMat g = metric.metric(y);
    const SmallMat b = metric.skew(y);
    double f = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) f += g(i, j) * dot2(s.dv[i][c], s.dv[j][c]) + b(i, j) * det2(s.dv[i][c], s.dv[j][c]);
    }
    sum.add(f);
  }
  return sum.value() * grid.h() * grid.h();
}

double gruter_variation(const MetricData& metric, std::span<const ScalarField> v, const ScalarField& phi, int j) {
  const Sampled s = prepare(metric, v);
  const Grid& grid = phi.grid();
  const int n = s.n;
  const VecField dphi = grad(phi);
  CompensatedSum sum;
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const bool local = phi[c] != 0.0 || dphi[c][0] != 0.0 || dphi[c][1] != 0.0;
    if (!local) continue;
    const auto y = values_at(v, c);
    const SmallMat g = metric.metric(y);
    const SmallMat b = metric.skew(y);
    const SmallMat dg = metric.metric_derivative(y, j);
    const SmallMat db = metric.skew_derivative(y, j);
    double f = 0.0;
    for (int k = 0; k < n; ++k) {
      f += 2.0 * g(j, k) * dot2(s.dv[k][c], dphi[c]);
      f += 2.0 * b(j, k) * det2(dphi[c], s.dv[k][c]);
      for (int l = 0; l < n; ++l) {
        f += (dg(k, l) * dot2(s.dv[k][c], s.dv[l][c]) + db(k, l) * det2(s.dv[k][c], s.dv[l][c])) * phi[c];
      }
    }
    sum.add(f);
  }
  return sum.value() * grid.h() * grid.h();
}

double el_residual(const MetricData& metric, std::span<const ScalarField> v) {
  const Grid& grid = v.front().grid();
  CompensatedSum total;
  for (const auto& phi : test_bumps(grid)) {
    for (int j = 0; j < metric.n; ++j) {
      const double r = gruter_variation(metric, v, phi, j);
      total.add(r * r);
    }
  }
  return std::sqrt(total.value());
}

double ellipticity_constant(const MetricData& metric, std::span<const ScalarField> v) {
  const Grid& grid = v.front().grid();
  double lambda = 1.0;
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const auto y = values_at(v, c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(metric.metric(y)), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    const Eigen::MatrixXd b = metric.skew(y);
    const double bn = b.size() ? Eigen::JacobiSVD<Eigen::MatrixXd>(b).singularValues()(0) : 0.0;
    if (!(lo > bn)) throw NotPositiveDefinite("ellipticity_constant: lambda_min <= |b| at a sample");
    lambda = std::max({lambda, hi + bn, 1.0 / (lo - bn)});
  }
  return lambda;
}

double dirichlet_energy(std::span<const ScalarField> v) {
  CompensatedSum sum;
  for (const auto& comp : v) {
    const VecField d = grad(comp);
    for (std::size_t c = 0; c < comp.grid().cells(); ++c) sum.add(dot2(d[c], d[c]));
  }
  const double h = v.front().grid().h();
  return sum.value() * h * h;
}

}  // namespace cgauge
