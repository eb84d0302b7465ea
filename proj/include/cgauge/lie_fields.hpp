#pragma once

// so(n)- and SO(n)-valued grid fields.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cgauge/grid.hpp"

namespace cgauge {

inline constexpr int kMaxN = 8;

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, kMaxN, kMaxN>;

/// Number of strictly upper entries of an n x n matrix.
constexpr int skew_dim(int n) noexcept { return n * (n - 1) / 2; }

/// (X - X^T) / 2, antisymmetric bit-exactly.
SmallMat skew_part(const SmallMat& X);
/// Squared Hilbert-Schmidt norm.
double hs2(const SmallMat& X);

/// Skew matrix from its strict upper triangle, listed row by row.
SmallMat skew_from_upper(int n, std::span<const double> upper);

/// exp(A) for antisymmetric A. Closed form for n = 2, Rodrigues for n = 3,
/// scaling and squaring otherwise.
SmallMat skew_exp(const SmallMat& A);

/// Nearest orthogonal matrix (polar factor).
SmallMat polar_project(const SmallMat& M);

// ---------------------------------------------------------------------------

/// Per cell, one n x n antisymmetric matrix for each spatial direction. Only
/// the strict upper triangle is stored, so antisymmetry is exact.
class SkewPotential {
 public:
  SkewPotential(const Grid& grid, int n);

  const Grid& grid() const noexcept { return grid_; }
  int n() const noexcept { return n_; }
  int dim() const noexcept { return m_; }

  /// Entry (i, j) of direction k at cell c; signed, zero on the diagonal.
  double get(std::size_t c, int k, int i, int j) const;
  /// Sets entry (i, j) and therefore (j, i) = -value. Requires i != j.
  void set(std::size_t c, int k, int i, int j, double value);

  SmallMat matrix(std::size_t c, int k) const;
  /// Stores the antisymmetric part of M.
  void set_matrix(std::size_t c, int k, const SmallMat& M);

  /// Strict upper entries for (c, k); row-major over i < j.
  std::span<double> upper(std::size_t c, int k) { return {data_.data() + offset(c, k), static_cast<std::size_t>(m_)}; }
  std::span<const double> upper(std::size_t c, int k) const {
    return {data_.data() + offset(c, k), static_cast<std::size_t>(m_)};
  }

  /// The 2-vector field Omega_ij.
  VecField component(int i, int j) const;
  void set_component(int i, int j, const VecField& v);

  std::span<const double> raw() const noexcept { return data_; }

  /// Squared Hilbert-Schmidt norm of (Omega_1, Omega_2) at cell c.
  double cell_norm2(std::size_t c) const;

  SkewPotential& operator+=(const SkewPotential& other);
  SkewPotential& operator*=(double s);
  SkewPotential operator-() const;

  bool operator==(const SkewPotential& other) const;

 private:
  std::size_t offset(std::size_t c, int k) const noexcept {
    return (c * 2 + static_cast<std::size_t>(k)) * static_cast<std::size_t>(m_);
  }
  int upper_index(int i, int j) const noexcept { return i * n_ - i * (i + 1) / 2 + (j - i - 1); }

  Grid grid_;
  int n_;
  int m_;
  std::vector<double> data_;
};

double l2_norm(const SkewPotential& omega);
/// Pointwise HS norm |Omega|(c).
std::vector<double> magnitude(const SkewPotential& omega);

// ---------------------------------------------------------------------------

struct RotationTag {};
struct MatrixTag {};

/// Per-cell n x n matrices, row-major per cell.
template <class Tag>
class BasicMatrixField {
 public:
  BasicMatrixField(const Grid& grid, int n, bool identity = true)
      : grid_(grid), n_(n), data_(grid.cells() * static_cast<std::size_t>(n * n), 0.0) {
    if (identity) {
      for (std::size_t c = 0; c < grid.cells(); ++c) {
        for (int i = 0; i < n; ++i) data_[c * n * n + i * n + i] = 1.0;
      }
    }
  }

  const Grid& grid() const noexcept { return grid_; }
  int n() const noexcept { return n_; }

  SmallMat at(std::size_t c) const {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data_.data() + c * n_ * n_, n_, n_);
  }
  void set(std::size_t c, const SmallMat& M) {
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) data_[c * n_ * n_ + i * n_ + j] = M(i, j);
    }
  }
  double& entry(std::size_t c, int i, int j) { return data_[c * n_ * n_ + i * n_ + j]; }
  double entry(std::size_t c, int i, int j) const { return data_[c * n_ * n_ + i * n_ + j]; }

  /// The scalar field of entry (i, j).
  ScalarField component(int i, int j) const {
    ScalarField out(grid_);
    for (std::size_t c = 0; c < grid_.cells(); ++c) out[c] = entry(c, i, j);
    return out;
  }

  std::span<const double> raw() const noexcept { return data_; }
  std::span<double> raw() noexcept { return data_; }

  bool operator==(const BasicMatrixField& other) const { return n_ == other.n_ && data_ == other.data_; }

 private:
  Grid grid_;
  int n_;
  std::vector<double> data_;
};

using RotationField = BasicMatrixField<RotationTag>;
using MatrixField = BasicMatrixField<MatrixTag>;

/// Entrywise partial derivative of a matrix field along `axis`.
MatrixField partial(const RotationField& P, int axis);
/// L2 norm of grad P (entrywise, both directions).
double grad_norm(const RotationField& P);

/// Omega^P = P^T dP - P^T Omega P per direction, antisymmetrized. The
/// discarded symmetric part is returned as a diagnostic.
struct GaugeAction {
  SkewPotential omega_P;
  /// L2 norm of the symmetric part of P^T dP that was dropped.
  double symmetric_defect;
};
GaugeAction gauge_action(const RotationField& P, const SkewPotential& omega);
SkewPotential gauge_transform(const RotationField& P, const SkewPotential& omega);

/// Cellwise R^T Omega R for constant R.
SkewPotential conjugate(const SkewPotential& omega, const SmallMat& R);
/// Cellwise R^T P (left) or P R (right).
RotationField left_multiply(const SmallMat& Rt, const RotationField& P);
RotationField right_multiply(const RotationField& P, const SmallMat& R);

/// Cellwise exp of a skew generator sampled at cell centers.
RotationField exp_field(const Grid& grid, int n, const std::function<SmallMat(double, double)>& generator);

// ---------------------------------------------------------------------------

SkewPotential random_skew_potential(int n, const Grid& grid, double amplitude, int smoothness, std::uint64_t seed);

/// Smooth random potential built from a fixed set of cosine modes whose
/// coefficients depend only on the seed, so one seed gives the same continuum
/// field on every grid. Normalized to the requested L2 norm.
SkewPotential random_smooth_potential(int n, const Grid& grid, double amplitude, int modes, std::uint64_t seed);

/// Random rotation field exp(A(x)) with smooth A, for tests.
RotationField random_rotation_field(int n, const Grid& grid, double scale, std::uint64_t seed);

/// Haar-ish random constant rotation.
SmallMat random_rotation(int n, std::uint64_t seed);

struct RotationReport {
  /// Largest entry of |P^T P - I| over all cells.
  double max_orthogonality_defect;
  double min_det;
  bool ok;
};
RotationReport validate_rotation(const RotationField& P);

}  // namespace cgauge
