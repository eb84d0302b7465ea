#pragma once

// Discrete calculus on the cell-centered unit square.
//
// Cell (i, j) has center ((i + 1/2) h, (j + 1/2) h) with h = 1/N; i runs along
// x, j along y, and flat storage is row-major with rows indexed by j
// (c = j * N + i). Derivatives use second-order central differences in the
// interior and second-order one-sided differences on the outermost ring.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cgauge {

/// Spatial dimension of the discrete kernels.
inline constexpr int kSpaceDim = 2;

class Grid {
 public:
  explicit Grid(int N);

  int N() const noexcept { return N_; }
  double h() const noexcept { return h_; }
  std::size_t cells() const noexcept { return static_cast<std::size_t>(N_) * N_; }
  std::size_t index(int i, int j) const noexcept { return static_cast<std::size_t>(j) * N_ + i; }
  double x(int i) const noexcept { return (i + 0.5) * h_; }
  double y(int j) const noexcept { return (j + 0.5) * h_; }
  /// Distance (in cells) from cell (i, j) to the nearest edge ring; 0 on the boundary ring.
  int ring(int i, int j) const noexcept;

  bool operator==(const Grid& other) const noexcept { return N_ == other.N_; }

 private:
  int N_;
  double h_;
};

using Vec2 = std::array<double, 2>;

class ScalarField {
 public:
  explicit ScalarField(const Grid& grid, double value = 0.0);
  ScalarField(const Grid& grid, std::vector<double> values);

  /// Samples f at every cell center.
  static ScalarField sample(const Grid& grid, const std::function<double(double, double)>& f);

  const Grid& grid() const noexcept { return grid_; }
  double& operator[](std::size_t c) { return values_[c]; }
  double operator[](std::size_t c) const { return values_[c]; }
  double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s);

 private:
  Grid grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

class VecField {
 public:
  explicit VecField(const Grid& grid, Vec2 value = {0.0, 0.0});
  static VecField sample(const Grid& grid, const std::function<Vec2(double, double)>& f);

  const Grid& grid() const noexcept { return grid_; }
  Vec2& operator[](std::size_t c) { return values_[c]; }
  const Vec2& operator[](std::size_t c) const { return values_[c]; }
  std::span<const Vec2> values() const noexcept { return values_; }

  VecField& operator+=(const VecField& other);
  VecField& operator-=(const VecField& other);
  VecField& operator*=(double s);

 private:
  Grid grid_;
  std::vector<Vec2> values_;
};

VecField operator+(VecField a, const VecField& b);
VecField operator-(VecField a, const VecField& b);
VecField operator*(double s, VecField a);

struct Ball {
  Vec2 center;
  double radius;

  bool contains(double x, double y) const noexcept;
  /// True when the closed ball lies inside the unit square.
  bool inside_unit_square() const noexcept;
  /// True when this ball lies inside `outer`.
  bool inside(const Ball& outer) const noexcept;
};

// ---------------------------------------------------------------------------
// One-dimensional difference stencil shared by every derivative.

/// Weights of d/dx at position i on a line of N cells (spacing h).
struct Stencil {
  std::array<int, 3> offset;
  std::array<double, 3> weight;
};
Stencil derivative_stencil(int i, int N, double h) noexcept;

/// Partial derivative along `axis` (0 = x, 1 = y) of a flat cell array.
void partial(const Grid& grid, int axis, std::span<const double> in, std::span<double> out);
/// Transpose of `partial` as a linear map.
void partial_transpose(const Grid& grid, int axis, std::span<const double> in, std::span<double> out);
/// Same maps applied to every component of an array with `comps` values per cell.
void partial(const Grid& grid, int axis, std::span<const double> in, std::span<double> out, int comps);
void partial_transpose(const Grid& grid, int axis, std::span<const double> in, std::span<double> out, int comps);

// ---------------------------------------------------------------------------
// Operators

VecField grad(const ScalarField& f);
/// (-d2 f, d1 f).
VecField perp_grad(const ScalarField& f);
ScalarField div(const VecField& v);
/// d1 v2 - d2 v1.
ScalarField curl(const VecField& v);
/// Five-point Laplacian on interior cells; zero on the boundary ring.
ScalarField laplacian5(const ScalarField& f);

/// Solves laplacian5(phi) = rhs on interior cells with phi = 0 on the boundary
/// ring. Throws SolverDiverged when the relative residual exceeds 1e-10.
ScalarField poisson_dirichlet(const ScalarField& rhs);

// ---------------------------------------------------------------------------
// Integrals and norms

/// Midpoint quadrature of |f|^p over cells whose centers lie in the ball.
/// `magnitude` holds |f| per cell. Throws EmptyBall if no center is inside.
double lp_norm_on_ball(const Grid& grid, std::span<const double> magnitude, double p, const Ball& ball);
double lp_norm_on_ball(const ScalarField& f, double p, const Ball& ball);
double lp_norm_on_ball(const VecField& f, double p, const Ball& ball);

/// Number of cell centers inside the ball.
std::size_t cells_in_ball(const Grid& grid, const Ball& ball);

std::vector<double> magnitude(const ScalarField& f);
std::vector<double> magnitude(const VecField& f);
/// Pointwise Hilbert-Schmidt norm of a stack of vector fields.
std::vector<double> magnitude(std::span<const VecField> rows);

double l2_norm(const ScalarField& f);
double l2_norm(const VecField& f);
double l2_norm(std::span<const VecField> rows);
/// Sum of f g h^2.
double inner(const ScalarField& f, const ScalarField& g);
double inner(const VecField& f, const VecField& g);

/// L2 norm restricted to cells whose centers are at least `margin` from the edge.
double interior_l2_norm(const ScalarField& f, double margin);

/// Fixed smooth test functions: tensor-product (1 - t^2)^4 bumps of half-width
/// 0.1 centered on the lattice {0.2, 0.4, 0.6, 0.8}^2. All vanish on the three
/// outer cell rings for N >= 30, where the one-sided stencils and their
/// transposes act.
std::vector<ScalarField> test_bumps(const Grid& grid);

/// Smooth compactly supported bump centered at `center` with half-width `width`.
ScalarField bump(const Grid& grid, Vec2 center, double width);

}  // namespace cgauge
