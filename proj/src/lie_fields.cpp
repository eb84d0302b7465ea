#include "cgauge/lie_fields.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "cgauge/errors.hpp"
#include "cgauge/numeric.hpp"

namespace cgauge {

SmallMat skew_part(const SmallMat& X) {
  const int n = static_cast<int>(X.rows());
  SmallMat out(n, n);
  for (int i = 0; i < n; ++i) {
    out(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (X(i, j) - X(j, i));
      out(i, j) = v;
      out(j, i) = -v;
    }
  }
  return out;
}

double hs2(const SmallMat& X) { return X.squaredNorm(); }

SmallMat skew_from_upper(int n, std::span<const double> upper) {
  SmallMat A = SmallMat::Zero(n, n);
  int p = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++p) {
      A(i, j) = upper[p];
      A(j, i) = -upper[p];
    }
  }
  return A;
}

namespace {

SmallMat exp_rodrigues(const SmallMat& A) {
  const double wx = A(2, 1), wy = A(0, 2), wz = A(1, 0);
  const double t2 = wx * wx + wy * wy + wz * wz;
  const double t = std::sqrt(t2);
  double a, b;
  if (t < 1e-4) {
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    a = std::sin(t) / t;
    b = (1.0 - std::cos(t)) / t2;
  }
  return SmallMat::Identity(3, 3) + a * A + b * (A * A);
}

SmallMat exp_scaling_squaring(const SmallMat& A) {
  const int n = static_cast<int>(A.rows());
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const SmallMat B = A / std::ldexp(1.0, s);
  SmallMat term = SmallMat::Identity(n, n);
  SmallMat sum = SmallMat::Identity(n, n);
  for (int k = 1; k <= 18; ++k) {
    term = term * B / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

}  // namespace

SmallMat skew_exp(const SmallMat& A) {
  const int n = static_cast<int>(A.rows());
  if (n != A.cols()) throw DimensionMismatch("skew_exp: matrix is not square");
  switch (n) {
    case 1:
      return SmallMat::Identity(1, 1);
    case 2: {
      const double t = A(1, 0);
      SmallMat R(2, 2);
      R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
      return R;
    }
    case 3:
      return exp_rodrigues(A);
    default:
      return exp_scaling_squaring(A);
  }
}

SmallMat polar_project(const SmallMat& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(M), Eigen::ComputeFullU | Eigen::ComputeFullV);
  return SmallMat(svd.matrixU() * svd.matrixV().transpose());
}

// ---------------------------------------------------------------------------

SkewPotential::SkewPotential(const Grid& grid, int n)
    : grid_(grid), n_(n), m_(skew_dim(n)), data_(grid.cells() * 2 * static_cast<std::size_t>(skew_dim(n)), 0.0) {
  if (n < 1 || n > kMaxN) {
    throw std::invalid_argument("SkewPotential: n must be in [1, " + std::to_string(kMaxN) + "], got " +
                                std::to_string(n));
  }
}

double SkewPotential::get(std::size_t c, int k, int i, int j) const {
  if (i == j) return 0.0;
  if (i < j) return data_[offset(c, k) + upper_index(i, j)];
  return -data_[offset(c, k) + upper_index(j, i)];
}

void SkewPotential::set(std::size_t c, int k, int i, int j, double value) {
  if (i == j) throw std::invalid_argument("SkewPotential::set: diagonal entry");
  if (i < j) {
    data_[offset(c, k) + upper_index(i, j)] = value;
  } else {
    data_[offset(c, k) + upper_index(j, i)] = -value;
  }
}

SmallMat SkewPotential::matrix(std::size_t c, int k) const { return skew_from_upper(n_, upper(c, k)); }

void SkewPotential::set_matrix(std::size_t c, int k, const SmallMat& M) {
  if (M.rows() != n_ || M.cols() != n_) throw DimensionMismatch("SkewPotential::set_matrix: wrong size");
  double* dst = data_.data() + offset(c, k);
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j) *dst++ = 0.5 * (M(i, j) - M(j, i));
  }
}

VecField SkewPotential::component(int i, int j) const {
  VecField out(grid_);
  for (std::size_t c = 0; c < grid_.cells(); ++c) out[c] = {get(c, 0, i, j), get(c, 1, i, j)};
  return out;
}

void SkewPotential::set_component(int i, int j, const VecField& v) {
  if (!(v.grid() == grid_)) throw DimensionMismatch("SkewPotential::set_component: grids differ");
  for (std::size_t c = 0; c < grid_.cells(); ++c) {
    set(c, 0, i, j, v[c][0]);
    set(c, 1, i, j, v[c][1]);
  }
}

double SkewPotential::cell_norm2(std::size_t c) const {
  double s = 0.0;
  for (int k = 0; k < 2; ++k) {
    for (double v : upper(c, k)) s += v * v;
  }
  return 2.0 * s;
}

SkewPotential& SkewPotential::operator+=(const SkewPotential& other) {
  if (!(grid_ == other.grid_) || n_ != other.n_) throw DimensionMismatch("SkewPotential +=: shapes differ");
  for (std::size_t a = 0; a < data_.size(); ++a) data_[a] += other.data_[a];
  return *this;
}

SkewPotential& SkewPotential::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

SkewPotential SkewPotential::operator-() const {
  SkewPotential out = *this;
  for (auto& v : out.data_) v = -v;
  return out;
}

bool SkewPotential::operator==(const SkewPotential& other) const {
  return grid_ == other.grid_ && n_ == other.n_ && data_ == other.data_;
}

double l2_norm(const SkewPotential& omega) {
  CompensatedSum sum;
  for (std::size_t c = 0; c < omega.grid().cells(); ++c) sum.add(omega.cell_norm2(c));
  return std::sqrt(sum.value()) * omega.grid().h();
}

std::vector<double> magnitude(const SkewPotential& omega) {
  std::vector<double> out(omega.grid().cells());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = std::sqrt(omega.cell_norm2(c));
  return out;
}

// ---------------------------------------------------------------------------

MatrixField partial(const RotationField& P, int axis) {
  MatrixField out(P.grid(), P.n(), false);
  partial(P.grid(), axis, P.raw(), out.raw(), P.n() * P.n());
  return out;
}

double grad_norm(const RotationField& P) {
  CompensatedSum sum;
  for (int axis = 0; axis < 2; ++axis) {
    const MatrixField d = partial(P, axis);
    for (double v : d.raw()) sum.add(v * v);
  }
  return std::sqrt(sum.value()) * P.grid().h();
}

GaugeAction gauge_action(const RotationField& P, const SkewPotential& omega) {
  if (!(P.grid() == omega.grid()) || P.n() != omega.n()) {
    throw DimensionMismatch("gauge_transform: P and Omega have different grid or n");
  }
  const Grid& g = P.grid();
  const int n = P.n();
  SkewPotential out(g, n);
  CompensatedSum defect;
  for (int k = 0; k < 2; ++k) {
    const MatrixField dP = partial(P, k);
    for (std::size_t c = 0; c < g.cells(); ++c) {
      const SmallMat Q = P.at(c);
      const SmallMat X = Q.transpose() * dP.at(c);
      const SmallMat sym = 0.5 * (X + X.transpose());
      defect.add(sym.squaredNorm());
      out.set_matrix(c, k, X - Q.transpose() * omega.matrix(c, k) * Q);
    }
  }
  return {std::move(out), std::sqrt(defect.value()) * g.h()};
}

SkewPotential gauge_transform(const RotationField& P, const SkewPotential& omega) {
  return gauge_action(P, omega).omega_P;
}

SkewPotential conjugate(const SkewPotential& omega, const SmallMat& R) {
  SkewPotential out(omega.grid(), omega.n());
  for (std::size_t c = 0; c < omega.grid().cells(); ++c) {
    for (int k = 0; k < 2; ++k) out.set_matrix(c, k, R.transpose() * omega.matrix(c, k) * R);
  }
  return out;
}

RotationField left_multiply(const SmallMat& Rt, const RotationField& P) {
  RotationField out(P.grid(), P.n(), false);
  for (std::size_t c = 0; c < P.grid().cells(); ++c) out.set(c, Rt * P.at(c));
  return out;
}

RotationField right_multiply(const RotationField& P, const SmallMat& R) {
  RotationField out(P.grid(), P.n(), false);
  for (std::size_t c = 0; c < P.grid().cells(); ++c) out.set(c, P.at(c) * R);
  return out;
}

RotationField exp_field(const Grid& grid, int n, const std::function<SmallMat(double, double)>& generator) {
  RotationField out(grid, n, false);
  for (int j = 0; j < grid.N(); ++j) {
    for (int i = 0; i < grid.N(); ++i) out.set(grid.index(i, j), skew_exp(skew_part(generator(grid.x(i), grid.y(j)))));
  }
  return out;
}

// ---------------------------------------------------------------------------

SkewPotential random_skew_potential(int n, const Grid& grid, double amplitude, int smoothness, std::uint64_t seed) {
  if (amplitude < 0.0) throw std::invalid_argument("random_skew_potential: amplitude must be >= 0");
  if (smoothness < 0) throw std::invalid_argument("random_skew_potential: smoothness must be >= 0");
  SkewPotential out(grid, n);
  if (amplitude == 0.0 || n < 2) return out;

  const int m = skew_dim(n);
  const int N = grid.N();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // One noise channel per (k, upper entry), drawn in a fixed order.
  std::vector<std::vector<double>> channels(2 * static_cast<std::size_t>(m), std::vector<double>(grid.cells()));
  for (auto& ch : channels) {
    for (auto& v : ch) v = normal(rng);
  }
  std::vector<double> tmp(grid.cells());
  for (auto& ch : channels) {
    for (int pass = 0; pass < smoothness; ++pass) {
      for (int j = 0; j < N; ++j) {
        for (int i = 0; i < N; ++i) {
          double acc = 4.0 * ch[grid.index(i, j)];
          acc += ch[grid.index(std::max(i - 1, 0), j)] + ch[grid.index(std::min(i + 1, N - 1), j)];
          acc += ch[grid.index(i, std::max(j - 1, 0))] + ch[grid.index(i, std::min(j + 1, N - 1))];
          tmp[grid.index(i, j)] = acc / 8.0;
        }
      }
      ch.swap(tmp);
    }
  }
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    for (int k = 0; k < 2; ++k) {
      auto up = out.upper(c, k);
      for (int p = 0; p < m; ++p) up[p] = channels[static_cast<std::size_t>(k * m + p)][c];
    }
  }
  const double norm = l2_norm(out);
  out *= amplitude / norm;
  return out;
}

SkewPotential random_smooth_potential(int n, const Grid& grid, double amplitude, int modes, std::uint64_t seed) {
  if (amplitude < 0.0) throw std::invalid_argument("random_smooth_potential: amplitude must be >= 0");
  if (modes < 1) throw std::invalid_argument("random_smooth_potential: modes must be >= 1");
  SkewPotential out(grid, n);
  if (amplitude == 0.0 || n < 2) return out;

  const int m = skew_dim(n);
  const double pi = std::acos(-1.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < 2; ++k) {
    for (int p = 0; p < m; ++p) {
      std::vector<double> coef(static_cast<std::size_t>(modes * modes));
      for (int b = 0; b < modes; ++b) {
        for (int a = 0; a < modes; ++a) coef[b * modes + a] = normal(rng) / (1.0 + a * a + b * b);
      }
      for (int j = 0; j < grid.N(); ++j) {
        for (int i = 0; i < grid.N(); ++i) {
          double v = 0.0;
          for (int b = 0; b < modes; ++b) {
            const double cy = std::cos(pi * b * grid.y(j));
            for (int a = 0; a < modes; ++a) v += coef[b * modes + a] * std::cos(pi * a * grid.x(i)) * cy;
          }
          out.upper(grid.index(i, j), k)[p] = v;
        }
      }
    }
  }
  // Cosine modes below N are orthogonal under midpoint sums, so this norm is
  // the continuum norm whenever modes < N.
  const double norm = l2_norm(out);
  out *= amplitude / norm;
  return out;
}

RotationField random_rotation_field(int n, const Grid& grid, double scale, std::uint64_t seed) {
  const SkewPotential gen = random_smooth_potential(n, grid, 1.0, 3, seed);
  RotationField out(grid, n, false);
  for (std::size_t c = 0; c < grid.cells(); ++c) out.set(c, skew_exp(scale * gen.matrix(c, 0)));
  return out;
}

SmallMat random_rotation(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) G(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  }
  if (Q.determinant() < 0) Q.col(0) *= -1.0;
  return SmallMat(Q);
}

RotationReport validate_rotation(const RotationField& P) {
  const int n = P.n();
  RotationReport rep{0.0, std::numeric_limits<double>::infinity(), true};
  for (std::size_t c = 0; c < P.grid().cells(); ++c) {
    const SmallMat Q = P.at(c);
    const SmallMat D = Q.transpose() * Q - SmallMat::Identity(n, n);
    rep.max_orthogonality_defect = std::max(rep.max_orthogonality_defect, D.cwiseAbs().maxCoeff());
    rep.min_det = std::min(rep.min_det, Eigen::MatrixXd(Q).determinant());
  }
  rep.ok = rep.max_orthogonality_defect <= 1e-8 && rep.min_det > 0.0;
  return rep;
}

}  // namespace cgauge
