#include "cgauge/frame.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>

#include "cgauge/errors.hpp"
#include "cgauge/numeric.hpp"

namespace cgauge {

double Polynomial::operator()(Point y) const {
  double s = 0.0;
  for (const auto& t : terms) {
    double v = t.coef;
    for (std::size_t m = 0; m < t.exponents.size(); ++m) v *= std::pow(y[m], t.exponents[m]);
    s += v;
  }
  return s;
}

double Polynomial::derivative(Point y, int k) const {
  double s = 0.0;
  for (const auto& t : terms) {
    if (static_cast<std::size_t>(k) >= t.exponents.size() || t.exponents[k] == 0) continue;
    double v = t.coef * t.exponents[k];
    for (std::size_t m = 0; m < t.exponents.size(); ++m) {
      const int e = static_cast<int>(m) == k ? t.exponents[m] - 1 : t.exponents[m];
      v *= std::pow(y[m], e);
    }
    s += v;
  }
  return s;
}

namespace {

double step_for(Point y) {
  double m = 1.0;
  for (double v : y) m = std::max(m, std::abs(v));
  return 1e-5 * m;
}

template <class Fn>
SmallMat central_difference(const Fn& f, Point y, int k) {
  std::vector<double> yp(y.begin(), y.end()), ym(y.begin(), y.end());
  const double s = step_for(y);
  yp[k] += s;
  ym[k] -= s;
  return (f(Point(yp)) - f(Point(ym))) / (2.0 * s);
}

std::function<SmallMat(Point)> affine_skew(int n, const MetricData::AffineSkew& b) {
  if (b.B0.size() == 0 && b.slope.empty()) {
    return [n](Point) -> SmallMat { return SmallMat::Zero(n, n); };
  }
  return [n, b](Point y) -> SmallMat {
    SmallMat out = b.B0.size() ? b.B0 : SmallMat::Zero(n, n);
    for (std::size_t m = 0; m < b.slope.size(); ++m) out += y[m] * b.slope[m];
    return skew_part(out);
  };
}

std::function<SmallMat(Point, int)> affine_skew_derivative(int n, const MetricData::AffineSkew& b) {
  return [n, b](Point, int k) -> SmallMat {
    if (static_cast<std::size_t>(k) >= b.slope.size()) return SmallMat::Zero(n, n);
    return skew_part(b.slope[k]);
  };
}

SmallMat reverse(const SmallMat& M) {
  const int n = static_cast<int>(M.rows());
  SmallMat out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = M(n - 1 - i, n - 1 - j);
  }
  return out;
}

// Lower Cholesky factor of the reversed metric; throws on a non-positive pivot.
SmallMat reversed_cholesky(const SmallMat& g) {
  const SmallMat G = reverse(g);
  const int n = static_cast<int>(G.rows());
  SmallMat L = SmallMat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double d = G(j, j);
    for (int k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > 0.0)) throw NotPositiveDefinite("metric has non-positive pivot " + std::to_string(d));
    L(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = G(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  return L;
}

}  // namespace

SmallMat MetricData::metric(Point y) const { return g(y); }

SmallMat MetricData::skew(Point y) const { return b ? b(y) : SmallMat::Zero(n, n); }

SmallMat MetricData::metric_derivative(Point y, int k) const {
  if (dg) return dg(y, k);
  return central_difference(g, y, k);
}

SmallMat MetricData::skew_derivative(Point y, int k) const {
  if (!b) return SmallMat::Zero(n, n);
  if (db) return db(y, k);
  return central_difference(b, y, k);
}

MetricData MetricData::euclidean(int n, AffineSkew b) {
  MetricData m;
  m.n = n;
  m.g = [n](Point) -> SmallMat { return SmallMat::Identity(n, n); };
  m.dg = [n](Point, int) -> SmallMat { return SmallMat::Zero(n, n); };
  m.b = affine_skew(n, b);
  m.db = affine_skew_derivative(n, b);
  return m;
}

MetricData MetricData::conformal(int n, Polynomial phi, AffineSkew b) {
  MetricData m;
  m.n = n;
  m.g = [n, phi](Point y) -> SmallMat { return std::exp(2.0 * phi(y)) * SmallMat::Identity(n, n); };
  m.dg = [n, phi](Point y, int k) -> SmallMat {
    return 2.0 * phi.derivative(y, k) * std::exp(2.0 * phi(y)) * SmallMat::Identity(n, n);
  };
  m.b = affine_skew(n, b);
  m.db = affine_skew_derivative(n, b);
  return m;
}

MetricData MetricData::diagonal(std::vector<Polynomial> diag, AffineSkew b) {
  MetricData m;
  const int n = static_cast<int>(diag.size());
  m.n = n;
  m.g = [n, diag](Point y) -> SmallMat {
    SmallMat out = SmallMat::Zero(n, n);
    for (int i = 0; i < n; ++i) out(i, i) = diag[i](y);
    return out;
  };
  m.dg = [n, diag](Point y, int k) -> SmallMat {
    SmallMat out = SmallMat::Zero(n, n);
    for (int i = 0; i < n; ++i) out(i, i) = diag[i].derivative(y, k);
    return out;
  };
  m.b = affine_skew(n, b);
  m.db = affine_skew_derivative(n, b);
  return m;
}

// ---------------------------------------------------------------------------

SmallMat FrameData::e(Point y) const {
  // With K the reversal permutation, K g K = L L^T and e = K L^T K is lower
  // triangular with e^T e = g.
  return reverse(SmallMat(reversed_cholesky(metric_.metric(y)).transpose()));
}

SmallMat FrameData::de(Point y, int k) const {
  const SmallMat L = reversed_cholesky(metric_.metric(y));
  const int n = static_cast<int>(L.rows());
  const SmallMat dG = reverse(metric_.metric_derivative(y, k));
  const Eigen::MatrixXd Linv = Eigen::MatrixXd(L).triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd X = Linv * Eigen::MatrixXd(dG) * Linv.transpose();
  for (int i = 0; i < n; ++i) {
    X(i, i) *= 0.5;
    for (int j = i + 1; j < n; ++j) X(i, j) = 0.0;
  }
  const SmallMat dL = SmallMat(Eigen::MatrixXd(L) * X);
  return reverse(SmallMat(dL.transpose()));
}

SmallMat FrameData::inverse_metric(Point y) const {
  return SmallMat(Eigen::MatrixXd(metric_.metric(y)).inverse());
}

FrameData build_frame(const MetricData& metric) {
  if (metric.n < 1 || metric.n > kMaxN || !metric.g) throw DimensionMismatch("build_frame: invalid metric data");
  return FrameData(metric);
}

Christoffel christoffel(const MetricData& metric, Point y) {
  const int n = metric.n;
  const SmallMat g = metric.metric(y);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt{Eigen::MatrixXd(g)};
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
    throw NotPositiveDefinite("christoffel: metric is not positive definite");
  }
  const SmallMat ginv = SmallMat(ldlt.solve(Eigen::MatrixXd::Identity(n, n)));
  std::vector<SmallMat> dg;
  for (int k = 0; k < n; ++k) dg.push_back(metric.metric_derivative(y, k));
  Christoffel out{n, std::vector<double>(static_cast<std::size_t>(n * n * n), 0.0)};
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      for (int l = k; l < n; ++l) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += ginv(i, j) * (dg[l](j, k) + dg[k](j, l) - dg[j](k, l));
        out.data[(static_cast<std::size_t>(i) * n + k) * n + l] = 0.5 * s;
        out.data[(static_cast<std::size_t>(i) * n + l) * n + k] = 0.5 * s;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

TransformedSystem assemble_transformed_system(const FrameData& frame, const SkewPotential& Omega,
                                              std::span<const ScalarField> u) {
  const int n = frame.n();
  if (Omega.n() != n || static_cast<int>(u.size()) != n) {
    throw DimensionMismatch("assemble_transformed_system: component counts differ");
  }
  const Grid& grid = Omega.grid();
  std::vector<VecField> du;
  for (const auto& comp : u) {
    if (!(comp.grid() == grid)) throw DimensionMismatch("assemble_transformed_system: grids differ");
    du.push_back(grad(comp));
  }

  TransformedSystem sys{MatrixField(grid, n, false),
                        std::vector<VecField>(static_cast<std::size_t>(n), VecField(grid)),
                        SkewPotential(grid, n),
                        SkewPotential(grid, n),
                        SkewPotential(grid, n),
                        SkewPotential(grid, n),
                        0.0,
                        0.0,
                        0.0};
  CompensatedSum inv_num, inv_den, om_def, omt_def;
  std::vector<double> y(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    for (int k = 0; k < n; ++k) y[k] = u[k][c];
    const Point py(y);
    const SmallMat e = frame.e(py);
    const SmallMat F = SmallMat(Eigen::MatrixXd(e) * Eigen::MatrixXd(frame.inverse_metric(py)));
    std::vector<SmallMat> de, db;
    for (int l = 0; l < n; ++l) {
      de.push_back(frame.de(py, l));
      db.push_back(frame.metric().skew_derivative(py, l));
    }
    sys.A.set(c, e);

    // xi and the inversion identity grad u^j = F_aj xi^a.
    std::vector<Vec2> xi(static_cast<std::size_t>(n), Vec2{0.0, 0.0});
    for (int a = 0; a < n; ++a) {
      for (int k = 0; k < n; ++k) {
        xi[a][0] += e(a, k) * du[k][c][0];
        xi[a][1] += e(a, k) * du[k][c][1];
      }
      sys.xi[a][c] = xi[a];
    }
    for (int j = 0; j < n; ++j) {
      for (int dir = 0; dir < 2; ++dir) {
        double back = 0.0;
        for (int a = 0; a < n; ++a) back += F(a, j) * xi[a][dir];
        inv_num.add((du[j][c][dir] - back) * (du[j][c][dir] - back));
        inv_den.add(du[j][c][dir] * du[j][c][dir]);
      }
    }

    for (int dir = 0; dir < 2; ++dir) {
      // omega_ab = sum_d sum_ik C^d_ik F_ai F_bk xi^d, C^d_ik = d_i e_dk - d_k e_di.
      SmallMat W = SmallMat::Zero(n, n);
      for (int d = 0; d < n; ++d) {
        SmallMat C(n, n);
        for (int i = 0; i < n; ++i) {
          for (int k = 0; k < n; ++k) C(i, k) = de[i](d, k) - de[k](d, i);
        }
        W += xi[d][dir] * (F * C * F.transpose());
      }
      const SmallMat Wt = F * Omega.matrix(c, dir) * F.transpose();
      SmallMat bp = SmallMat::Zero(n, n);
      for (int l = 0; l < n; ++l) {
        const double perp = dir == 0 ? -du[l][c][1] : du[l][c][0];
        bp += perp * db[l];
      }
      const SmallMat Bt = F * bp * F.transpose();

      om_def.add((W - skew_part(W)).squaredNorm());
      omt_def.add((Wt - skew_part(Wt)).squaredNorm());
      sys.omega.set_matrix(c, dir, W);
      sys.omega_tilde.set_matrix(c, dir, Wt);
      sys.b_tilde.set_matrix(c, dir, Bt);
      sys.theta.set_matrix(c, dir, W + Wt + Bt);
    }
  }
  const double h = grid.h();
  sys.inversion_residual = inv_den.value() > 0.0 ? std::sqrt(inv_num.value() / inv_den.value()) : 0.0;
  sys.omega_defect = std::sqrt(om_def.value()) * h;
  sys.omega_tilde_defect = std::sqrt(omt_def.value()) * h;
  return sys;
}

namespace {

double weak_norm(const Grid& grid, const std::vector<VecField>& flux, const std::vector<ScalarField>& source) {
  CompensatedSum total;
  for (const auto& phi : test_bumps(grid)) {
    const VecField dphi = grad(phi);
    for (std::size_t a = 0; a < flux.size(); ++a) {
      const double r = -inner(flux[a], dphi) - inner(source[a], phi);
      total.add(r * r);
    }
  }
  return std::sqrt(total.value());
}

}  // namespace

double transformed_residual(const TransformedSystem& sys) {
  const Grid& grid = sys.theta.grid();
  const int n = sys.theta.n();
  std::vector<ScalarField> source(static_cast<std::size_t>(n), ScalarField(grid));
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    for (int a = 0; a < n; ++a) {
      double s = 0.0;
      for (int b = 0; b < n; ++b) {
        for (int dir = 0; dir < 2; ++dir) s += sys.theta.get(c, dir, a, b) * sys.xi[b][c][dir];
      }
      source[a][c] = s;
    }
  }
  return weak_norm(grid, sys.xi, source);
}

double metric_system_residual(const MetricData& metric, const SkewPotential& Omega, std::span<const ScalarField> u) {
  const int n = metric.n;
  const Grid& grid = Omega.grid();
  std::vector<VecField> du;
  for (const auto& comp : u) du.push_back(grad(comp));
  std::vector<VecField> flux(static_cast<std::size_t>(n), VecField(grid));
  std::vector<ScalarField> source(static_cast<std::size_t>(n), ScalarField(grid));
  std::vector<double> y(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    for (int k = 0; k < n; ++k) y[k] = u[k][c];
    const Point py(y);
    const SmallMat g = metric.metric(py);
    std::vector<SmallMat> dg, db;
    for (int l = 0; l < n; ++l) {
      dg.push_back(metric.metric_derivative(py, l));
      db.push_back(metric.skew_derivative(py, l));
    }
    for (int i = 0; i < n; ++i) {
      Vec2 f{0.0, 0.0};
      for (int k = 0; k < n; ++k) {
        f[0] += g(i, k) * du[k][c][0];
        f[1] += g(i, k) * du[k][c][1];
      }
      flux[i][c] = f;
      double s = 0.0;
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          s += 0.5 * dg[i](k, l) * (du[k][c][0] * du[l][c][0] + du[k][c][1] * du[l][c][1]);
        }
        for (int dir = 0; dir < 2; ++dir) s += Omega.get(c, dir, i, k) * du[k][c][dir];
        // perp_grad(b_ik(u)) . grad u^k = sum_l d_l b_ik (perp grad u^l . grad u^k)
        for (int l = 0; l < n; ++l) {
          s += db[l](i, k) * (-du[l][c][1] * du[k][c][0] + du[l][c][0] * du[k][c][1]);
        }
      }
      source[i][c] = s;
    }
  }
  return weak_norm(grid, flux, source);
}

}  // namespace cgauge
