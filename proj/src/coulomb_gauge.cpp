#include "cgauge/coulomb_gauge.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "cgauge/errors.hpp"
#include "cgauge/numeric.hpp"
#include "cgauge/parallel.hpp"

namespace cgauge {

std::string to_string(GaugeMode mode) {
  return mode == GaugeMode::FreeBoundary ? "free-boundary" : "dirichlet-identity";
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::GradientTolerance:
      return "gradient-tolerance";
    case Termination::EnergyStall:
      return "energy-stall";
    case Termination::MaxIterations:
      return "max-iterations";
    case Termination::LineSearchFailed:
      return "line-search-failed";
  }
  return "unknown";
}

void GaugeOptions::validate() const {
  if (max_iterations < 0) throw ConfigError("max_iterations", "must be >= 0");
  if (!(grad_tol > 0.0)) throw ConfigError("grad_tol", "must be > 0");
  if (!(energy_tol > 0.0)) throw ConfigError("energy_tol", "must be > 0");
  if (stall_window < 1) throw ConfigError("stall_window", "must be >= 1");
  if (!(initial_step > 0.0)) throw ConfigError("initial_step", "must be > 0");
  if (!(backtracking > 0.0 && backtracking < 1.0)) throw ConfigError("backtracking", "must lie in (0, 1)");
  if (!(armijo > 0.0 && armijo < 1.0)) throw ConfigError("armijo", "must lie in (0, 1)");
  if (!(preconditioner_shift > 0.0)) throw ConfigError("preconditioner_shift", "must be > 0");
  if (threads < 1) throw ConfigError("threads", "must be >= 1");
}

SkewScalarField::SkewScalarField(const Grid& grid, int n)
    : grid_(grid), n_(n), m_(static_cast<std::size_t>(skew_dim(n))), data_(grid.cells() * m_, 0.0) {}

ScalarField SkewScalarField::component(int s, int t) const {
  ScalarField out(grid_);
  const double sign = s < t ? 1.0 : -1.0;
  const int a = std::min(s, t), b = std::max(s, t);
  const int p = a * n_ - a * (a + 1) / 2 + (b - a - 1);
  for (std::size_t c = 0; c < grid_.cells(); ++c) out[c] = sign * data_[c * m_ + p];
  return out;
}

double l2_norm(const SkewScalarField& G) {
  CompensatedSum sum;
  for (double v : G.raw()) sum.add(2.0 * v * v);
  return std::sqrt(sum.value()) * G.grid().h();
}

namespace {

void check_shapes(const RotationField& Q, const SkewPotential& omega) {
  if (!(Q.grid() == omega.grid()) || Q.n() != omega.n()) {
    throw DimensionMismatch("rotation field and potential have different grid or n");
  }
}

// Energy, and optionally G. The energy path is identical with or without the
// gradient so line-search values and trace values agree bit for bit.
double evaluate(const RotationField& Q, const SkewPotential& omega, SkewScalarField* G, int threads) {
  check_shapes(Q, omega);
  const Grid& g = Q.grid();
  const int n = Q.n();
  const std::size_t cells = g.cells();
  std::vector<double> density(cells, 0.0);
  std::vector<SmallMat> gamma;
  if (G) gamma.assign(cells, SmallMat::Zero(n, n));

  for (int k = 0; k < 2; ++k) {
    const MatrixField dQ = partial(Q, k);
    MatrixField Y(g, n, false);
    std::vector<SmallMat> S(G ? cells : 0), M(G ? cells : 0), B(G ? cells : 0);
    parallel_for(cells, threads, [&](std::size_t c) {
      const SmallMat Qc = Q.at(c);
      const SmallMat Mc = Qc.transpose() * dQ.at(c);
      const SmallMat Bc = Qc.transpose() * omega.matrix(c, k) * Qc;
      const SmallMat Sc = skew_part(Mc - Bc);
      density[c] += Sc.squaredNorm();
      if (G) {
        Y.set(c, Qc * Sc);
        S[c] = Sc;
        M[c] = Mc;
        B[c] = Bc;
      }
    });
    if (!G) continue;
    MatrixField Z(g, n, false);
    partial_transpose(g, k, Y.raw(), Z.raw(), n * n);
    parallel_for(cells, threads, [&](std::size_t c) {
      gamma[c] += -S[c] * M[c].transpose() + Q.at(c).transpose() * Z.at(c) - B[c].transpose() * S[c] +
                  S[c] * B[c].transpose();
    });
  }
  if (G) {
    for (std::size_t c = 0; c < cells; ++c) {
      auto up = G->upper(c);
      int p = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j, ++p) up[p] = -0.5 * (gamma[c](i, j) - gamma[c](j, i));
      }
    }
  }
  CompensatedSum sum;
  for (double v : density) sum.add(v);
  return sum.value() * g.h() * g.h();
}

// Sparse matrix of the one-dimensional derivative along `axis` on the full grid.
Eigen::SparseMatrix<double> derivative_matrix(const Grid& g, int axis) {
  const int N = g.N();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.cells() * 3);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < N; ++i) {
      const int pos = axis == 0 ? i : j;
      const Stencil st = derivative_stencil(pos, N, g.h());
      for (int k = 0; k < 3; ++k) {
        if (st.weight[k] == 0.0) continue;
        const int q = pos + st.offset[k];
        const std::size_t col = axis == 0 ? g.index(q, j) : g.index(i, q);
        trip.emplace_back(static_cast<int>(g.index(i, j)), static_cast<int>(col), st.weight[k]);
      }
    }
  }
  Eigen::SparseMatrix<double> D(static_cast<int>(g.cells()), static_cast<int>(g.cells()));
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

// (D^T D + mu) restricted to the free cells, factored once per configuration.
struct Preconditioner {
  std::vector<int> free_cells;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

std::shared_ptr<const Preconditioner> preconditioner(const Grid& g, GaugeMode mode, double mu) {
  using Key = std::tuple<int, int, double>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const Preconditioner>> cache;
  const Key key{g.N(), static_cast<int>(mode), mu};
  std::lock_guard<std::mutex> lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  auto pre = std::make_shared<Preconditioner>();
  std::vector<int> slot(g.cells(), -1);
  for (int j = 0; j < g.N(); ++j) {
    for (int i = 0; i < g.N(); ++i) {
      if (mode == GaugeMode::DirichletIdentity && g.ring(i, j) == 0) continue;
      slot[g.index(i, j)] = static_cast<int>(pre->free_cells.size());
      pre->free_cells.push_back(static_cast<int>(g.index(i, j)));
    }
  }
  const auto Dx = derivative_matrix(g, 0);
  const auto Dy = derivative_matrix(g, 1);
  Eigen::SparseMatrix<double> K = Eigen::SparseMatrix<double>(Dx.transpose()) * Dx +
                                  Eigen::SparseMatrix<double>(Dy.transpose()) * Dy;
  std::vector<Eigen::Triplet<double>> trip;
  for (int col = 0; col < K.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
      const int r = slot[it.row()], c = slot[it.col()];
      if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
    }
  }
  const int m = static_cast<int>(pre->free_cells.size());
  for (int r = 0; r < m; ++r) trip.emplace_back(r, r, mu);
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trip.begin(), trip.end());
  pre->ldlt.compute(A);
  if (pre->ldlt.info() != Eigen::Success) throw SolverDiverged("gauge preconditioner factorization failed");
  cache.emplace(key, pre);
  return pre;
}

SkewScalarField precondition(const SkewScalarField& G, const Preconditioner& pre, int threads) {
  SkewScalarField d(G.grid(), G.n());
  const std::size_t m = static_cast<std::size_t>(G.dim());
  const std::size_t nf = pre.free_cells.size();
  parallel_for(m, threads, [&](std::size_t p) {
    Eigen::VectorXd b(static_cast<Eigen::Index>(nf));
    for (std::size_t r = 0; r < nf; ++r) b[r] = G.raw()[pre.free_cells[r] * m + p];
    const Eigen::VectorXd x = pre.ldlt.solve(b);
    for (std::size_t r = 0; r < nf; ++r) d.raw()[pre.free_cells[r] * m + p] = x[r];
  });
  return d;
}

RotationField step(const RotationField& Q, const SkewScalarField& d, double tau, int threads) {
  RotationField out(Q.grid(), Q.n(), false);
  parallel_for(Q.grid().cells(), threads, [&](std::size_t c) {
    bool zero = true;
    for (double v : d.upper(c)) zero = zero && v == 0.0;
    if (zero) {
      out.set(c, Q.at(c));
    } else {
      out.set(c, Q.at(c) * skew_exp(tau * d.matrix(c)));
    }
  });
  return out;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double energy(const RotationField& Q, const SkewPotential& omega) { return evaluate(Q, omega, nullptr, 1); }

EnergyGradient energy_gradient(const RotationField& Q, const SkewPotential& omega) {
  SkewScalarField G(Q.grid(), Q.n());
  const double e = evaluate(Q, omega, &G, 1);
  return {e, std::move(G)};
}

double pairing(const SkewScalarField& G, const ScalarField& phi, const SmallMat& alpha) {
  CompensatedSum sum;
  for (std::size_t c = 0; c < G.grid().cells(); ++c) {
    if (phi[c] == 0.0) continue;
    sum.add(phi[c] * G.matrix(c).cwiseProduct(alpha).sum());
  }
  return sum.value() * G.grid().h() * G.grid().h();
}

EulerLagrangeResidual euler_lagrange_residual(const RotationField& P, const SkewPotential& omega) {
  auto eg = energy_gradient(P, omega);
  const Grid& g = P.grid();
  const int n = P.n();
  const SkewPotential omega_P = gauge_transform(P, omega);
  const auto bumps = test_bumps(g);
  double weak = 0.0, flux = 0.0;
  for (const auto& phi : bumps) {
    const VecField dphi = grad(phi);
    for (int s = 0; s < n; ++s) {
      for (int t = s + 1; t < n; ++t) {
        weak = std::max(weak, std::abs(inner(eg.G.component(s, t), phi)));
        flux = std::max(flux, std::abs(inner(omega_P.component(s, t), dphi)));
      }
    }
  }
  const double l2 = l2_norm(eg.G);
  return {std::move(eg.G), l2, weak, flux};
}

GaugeResult minimize(const SkewPotential& omega, const GaugeOptions& opts) {
  opts.validate();
  const Grid& g = omega.grid();
  const int n = omega.n();
  const int threads = opts.threads;
  const double h2 = g.h() * g.h();
  const double omega_norm = l2_norm(omega);
  const double tol = opts.grad_tol * (1.0 + omega_norm);

  RotationField Q(g, n);
  SkewScalarField G(g, n);
  double E = evaluate(Q, omega, &G, threads);
  double gnorm = l2_norm(G);

  GaugeResult res{Q, SkewPotential(g, n), {E}, {gnorm}};
  res.omega_norm = omega_norm;
  const auto pre = n >= 2 ? preconditioner(g, opts.mode, opts.preconditioner_shift) : nullptr;

  int it = 0;
  for (;; ++it) {
    if (gnorm <= tol) {
      res.termination = Termination::GradientTolerance;
      res.converged = true;
      break;
    }
    const auto& tr = res.energies;
    if (static_cast<int>(tr.size()) > opts.stall_window) {
      const double before = tr[tr.size() - 1 - static_cast<std::size_t>(opts.stall_window)];
      if (before - E <= opts.energy_tol * before) {
        res.termination = Termination::EnergyStall;
        break;
      }
    }
    if (it >= opts.max_iterations) {
      res.termination = Termination::MaxIterations;
      break;
    }

    const SkewScalarField d = precondition(G, *pre, threads);
    CompensatedSum slope_sum;
    for (std::size_t a = 0; a < d.raw().size(); ++a) slope_sum.add(G.raw()[a] * d.raw()[a]);
    const double slope = -4.0 * h2 * slope_sum.value();
    const double dmax = max_abs(d.raw());
    if (!(slope < 0.0) || dmax == 0.0) {
      res.termination = Termination::LineSearchFailed;
      break;
    }

    double tau = std::min(opts.initial_step, 1.0 / dmax);
    bool accepted = false;
    RotationField Qn(g, n);
    double En = E;
    for (int ls = 0; ls < 60; ++ls) {
      Qn = step(Q, d, tau, threads);
      En = evaluate(Qn, omega, nullptr, threads);
      const double predicted = -tau * slope;
      if (En <= E + opts.armijo * tau * slope) {
        accepted = true;
        break;
      }
      // Below this scale the energy difference is rounding noise; any
      // non-increasing step is taken.
      if (predicted <= 1e-14 * E && En <= E) {
        accepted = true;
        break;
      }
      tau *= opts.backtracking;
    }
    if (!accepted) {
      res.termination = Termination::LineSearchFailed;
      break;
    }

    Q = std::move(Qn);
    if (it % 10 == 9) {
      const auto rep = validate_rotation(Q);
      if (rep.max_orthogonality_defect > 1e-10) {
        for (std::size_t c = 0; c < g.cells(); ++c) Q.set(c, polar_project(Q.at(c)));
      }
    }
    E = evaluate(Q, omega, &G, threads);
    gnorm = l2_norm(G);
    res.energies.push_back(E);
    res.residuals.push_back(gnorm);
  }

  res.iterations = it;
  res.P = Q;
  auto action = gauge_action(Q, omega);
  res.omega_P = std::move(action.omega_P);
  res.symmetric_defect = action.symmetric_defect;
  res.grad_P_norm = grad_norm(Q);
  res.omega_P_norm = l2_norm(res.omega_P);
  res.weak_residual = euler_lagrange_residual(Q, omega).weak;
  return res;
}

RotationField oracle_n2(const SkewPotential& omega) {
  if (omega.n() != 2) throw DimensionMismatch("oracle_n2 requires n = 2");
  const Grid& g = omega.grid();
  const int cells = static_cast<int>(g.cells());
  const std::array<Eigen::SparseMatrix<double>, 2> D{derivative_matrix(g, 0), derivative_matrix(g, 1)};
  std::array<Eigen::VectorXd, 2> theta;
  for (int k = 0; k < 2; ++k) {
    theta[k].resize(cells);
    for (int c = 0; c < cells; ++c) theta[k][c] = omega.get(static_cast<std::size_t>(c), k, 1, 0);
  }

  // Gauss-Newton on sum_k |psi_k(phi) - theta_k|^2 with
  // psi_k(c) = sum_m D_k(c, m) sin(phi_m - phi_c); the first step from
  // phi = 0 is the linear least-squares problem D^T D phi = D^T theta.
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(cells);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::SparseMatrix<double> JtJ(cells, cells);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(cells);
    for (int k = 0; k < 2; ++k) {
      std::vector<Eigen::Triplet<double>> trip;
      Eigen::VectorXd r(cells);
      std::vector<double> diag(cells, 0.0);
      for (int col = 0; col < D[k].outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(D[k], col); it; ++it) {
          const int c = static_cast<int>(it.row()), m = static_cast<int>(it.col());
          if (m == c) continue;
          const double w = it.value() * std::cos(phi[m] - phi[c]);
          trip.emplace_back(c, m, w);
          diag[c] -= w;
        }
      }
      r.setZero();
      for (int col = 0; col < D[k].outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(D[k], col); it; ++it) {
          const int c = static_cast<int>(it.row()), m = static_cast<int>(it.col());
          r[c] += it.value() * std::sin(phi[m] - phi[c]);
        }
      }
      r -= theta[k];
      for (int c = 0; c < cells; ++c) trip.emplace_back(c, c, diag[c]);
      Eigen::SparseMatrix<double> J(cells, cells);
      J.setFromTriplets(trip.begin(), trip.end());
      const Eigen::SparseMatrix<double> Jt = J.transpose();
      JtJ += Jt * J;
      rhs -= Jt * r;
    }
    // The energy is invariant under constant shifts of phi; pinning cell 0
    // removes that null direction exactly because rhs sums to zero.
    JtJ.coeffRef(0, 0) += 1.0;
    if (iter == 0) ldlt.analyzePattern(JtJ);
    ldlt.factorize(JtJ);
    if (ldlt.info() != Eigen::Success) throw SolverDiverged("oracle_n2: Gauss-Newton system is singular");
    const Eigen::VectorXd delta = ldlt.solve(rhs);
    if (!delta.allFinite()) throw SolverDiverged("oracle_n2: non-finite update");
    phi += delta;
    if (delta.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + phi.lpNorm<Eigen::Infinity>())) break;
  }
  phi.array() -= phi.mean();

  RotationField P(g, 2, false);
  for (int c = 0; c < cells; ++c) {
    SmallMat R(2, 2);
    R << std::cos(phi[c]), -std::sin(phi[c]), std::sin(phi[c]), std::cos(phi[c]);
    P.set(static_cast<std::size_t>(c), R);
  }
  return P;
}

Alignment align_right(const RotationField& A, const RotationField& B) {
  if (!(A.grid() == B.grid()) || A.n() != B.n()) throw DimensionMismatch("align_right: shapes differ");
  const int n = A.n();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t c = 0; c < A.grid().cells(); ++c) M += Eigen::MatrixXd(A.at(c).transpose() * B.at(c));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd U = svd.matrixU();
  if ((U * svd.matrixV().transpose()).determinant() < 0) U.col(n - 1) *= -1.0;
  const SmallMat R = SmallMat(U * svd.matrixV().transpose());
  CompensatedSum sum;
  for (std::size_t c = 0; c < A.grid().cells(); ++c) sum.add((A.at(c) * R - B.at(c)).squaredNorm());
  return {R, std::sqrt(sum.value()) * A.grid().h()};
}

}  // namespace cgauge
