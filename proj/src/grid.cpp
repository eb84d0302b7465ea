#include "cgauge/grid.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include "cgauge/errors.hpp"
#include "cgauge/numeric.hpp"

namespace cgauge {

Grid::Grid(int N) : N_(N), h_(1.0 / N) {
  if (N < 4) {
    throw std::invalid_argument("Grid: N must be at least 4, got " + std::to_string(N));
  }
}

int Grid::ring(int i, int j) const noexcept {
  return std::min(std::min(i, N_ - 1 - i), std::min(j, N_ - 1 - j));
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(const Grid& grid, double value) : grid_(grid), values_(grid.cells(), value) {}

ScalarField::ScalarField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.cells()) {
    throw DimensionMismatch("ScalarField: value count does not match grid");
  }
}

ScalarField ScalarField::sample(const Grid& grid, const std::function<double(double, double)>& f) {
  ScalarField out(grid);
  for (int j = 0; j < grid.N(); ++j) {
    for (int i = 0; i < grid.N(); ++i) out(i, j) = f(grid.x(i), grid.y(j));
  }
  return out;
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  if (!(grid_ == other.grid_)) throw DimensionMismatch("ScalarField +=: grids differ");
  for (std::size_t c = 0; c < values_.size(); ++c) values_[c] += other.values_[c];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  if (!(grid_ == other.grid_)) throw DimensionMismatch("ScalarField -=: grids differ");
  for (std::size_t c = 0; c < values_.size(); ++c) values_[c] -= other.values_[c];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (auto& v : values_) v *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

VecField::VecField(const Grid& grid, Vec2 value) : grid_(grid), values_(grid.cells(), value) {}

VecField VecField::sample(const Grid& grid, const std::function<Vec2(double, double)>& f) {
  VecField out(grid);
  for (int j = 0; j < grid.N(); ++j) {
    for (int i = 0; i < grid.N(); ++i) out[grid.index(i, j)] = f(grid.x(i), grid.y(j));
  }
  return out;
}

VecField& VecField::operator+=(const VecField& other) {
  if (!(grid_ == other.grid_)) throw DimensionMismatch("VecField +=: grids differ");
  for (std::size_t c = 0; c < values_.size(); ++c) {
    values_[c][0] += other.values_[c][0];
    values_[c][1] += other.values_[c][1];
  }
  return *this;
}

VecField& VecField::operator-=(const VecField& other) {
  if (!(grid_ == other.grid_)) throw DimensionMismatch("VecField -=: grids differ");
  for (std::size_t c = 0; c < values_.size(); ++c) {
    values_[c][0] -= other.values_[c][0];
    values_[c][1] -= other.values_[c][1];
  }
  return *this;
}

VecField& VecField::operator*=(double s) {
  for (auto& v : values_) {
    v[0] *= s;
    v[1] *= s;
  }
  return *this;
}

VecField operator+(VecField a, const VecField& b) { return a += b; }
VecField operator-(VecField a, const VecField& b) { return a -= b; }
VecField operator*(double s, VecField a) { return a *= s; }

bool Ball::contains(double x, double y) const noexcept {
  const double dx = x - center[0];
  const double dy = y - center[1];
  return dx * dx + dy * dy <= radius * radius;
}

bool Ball::inside_unit_square() const noexcept {
  return center[0] - radius >= 0.0 && center[0] + radius <= 1.0 && center[1] - radius >= 0.0 &&
         center[1] + radius <= 1.0;
}

bool Ball::inside(const Ball& outer) const noexcept {
  const double d = std::hypot(center[0] - outer.center[0], center[1] - outer.center[1]);
  return d + radius <= outer.radius * (1.0 + 1e-14);
}

// ---------------------------------------------------------------------------

Stencil derivative_stencil(int i, int N, double h) noexcept {
  const double s = 1.0 / (2.0 * h);
  if (i == 0) return {{0, 1, 2}, {-3.0 * s, 4.0 * s, -1.0 * s}};
  if (i == N - 1) return {{0, -1, -2}, {3.0 * s, -4.0 * s, 1.0 * s}};
  return {{-1, 1, 0}, {-s, s, 0.0}};
}

void partial(const Grid& grid, int axis, std::span<const double> in, std::span<double> out, int comps) {
  const int N = grid.N();
  const double h = grid.h();
  const std::size_t nc = static_cast<std::size_t>(comps);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < N; ++i) {
      const int pos = axis == 0 ? i : j;
      const Stencil st = derivative_stencil(pos, N, h);
      double* dst = out.data() + grid.index(i, j) * nc;
      for (std::size_t a = 0; a < nc; ++a) dst[a] = 0.0;
      for (int k = 0; k < 3; ++k) {
        if (st.weight[k] == 0.0) continue;
        const int q = pos + st.offset[k];
        const double* src = in.data() + (axis == 0 ? grid.index(q, j) : grid.index(i, q)) * nc;
        for (std::size_t a = 0; a < nc; ++a) dst[a] += st.weight[k] * src[a];
      }
    }
  }
}

void partial_transpose(const Grid& grid, int axis, std::span<const double> in, std::span<double> out,
                       int comps) {
  const int N = grid.N();
  const double h = grid.h();
  const std::size_t nc = static_cast<std::size_t>(comps);
  std::fill(out.begin(), out.end(), 0.0);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < N; ++i) {
      const int pos = axis == 0 ? i : j;
      const Stencil st = derivative_stencil(pos, N, h);
      const double* src = in.data() + grid.index(i, j) * nc;
      for (int k = 0; k < 3; ++k) {
        if (st.weight[k] == 0.0) continue;
        const int q = pos + st.offset[k];
        double* dst = out.data() + (axis == 0 ? grid.index(q, j) : grid.index(i, q)) * nc;
        for (std::size_t a = 0; a < nc; ++a) dst[a] += st.weight[k] * src[a];
      }
    }
  }
}

void partial(const Grid& grid, int axis, std::span<const double> in, std::span<double> out) {
  partial(grid, axis, in, out, 1);
}

void partial_transpose(const Grid& grid, int axis, std::span<const double> in, std::span<double> out) {
  partial_transpose(grid, axis, in, out, 1);
}

namespace {

std::vector<double> component(const VecField& v, int k) {
  std::vector<double> out(v.grid().cells());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = v[c][k];
  return out;
}

}  // namespace

VecField grad(const ScalarField& f) {
  const Grid& g = f.grid();
  std::vector<double> dx(g.cells()), dy(g.cells());
  partial(g, 0, f.values(), dx);
  partial(g, 1, f.values(), dy);
  VecField out(g);
  for (std::size_t c = 0; c < g.cells(); ++c) out[c] = {dx[c], dy[c]};
  return out;
}

VecField perp_grad(const ScalarField& f) {
  VecField out = grad(f);
  for (std::size_t c = 0; c < f.grid().cells(); ++c) {
    const Vec2 v = out[c];
    out[c] = {-v[1], v[0]};
  }
  return out;
}

ScalarField div(const VecField& v) {
  const Grid& g = v.grid();
  std::vector<double> d1(g.cells()), d2(g.cells());
  partial(g, 0, component(v, 0), d1);
  partial(g, 1, component(v, 1), d2);
  for (std::size_t c = 0; c < d1.size(); ++c) d1[c] += d2[c];
  return ScalarField(g, std::move(d1));
}

ScalarField curl(const VecField& v) {
  const Grid& g = v.grid();
  std::vector<double> d1(g.cells()), d2(g.cells());
  partial(g, 0, component(v, 1), d1);
  partial(g, 1, component(v, 0), d2);
  for (std::size_t c = 0; c < d1.size(); ++c) d1[c] -= d2[c];
  return ScalarField(g, std::move(d1));
}

ScalarField laplacian5(const ScalarField& f) {
  const Grid& g = f.grid();
  const int N = g.N();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  ScalarField out(g);
  for (int j = 1; j < N - 1; ++j) {
    for (int i = 1; i < N - 1; ++i) {
      out(i, j) = (f(i + 1, j) + f(i - 1, j) + f(i, j + 1) + f(i, j - 1) - 4.0 * f(i, j)) * inv_h2;
    }
  }
  return out;
}

namespace {

// Factorization of the negative five-point Laplacian on the interior cells.
struct DirichletFactor {
  int N;
  Eigen::SparseMatrix<double> A;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

std::shared_ptr<const DirichletFactor> dirichlet_factor(int N) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const DirichletFactor>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  if (auto it = cache.find(N); it != cache.end()) return it->second;

  const int M = N - 2;
  const double inv_h2 = static_cast<double>(N) * N;
  auto idx = [M](int i, int j) { return (j - 1) * M + (i - 1); };
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(M) * M * 5);
  for (int j = 1; j <= M; ++j) {
    for (int i = 1; i <= M; ++i) {
      const int r = idx(i, j);
      trip.emplace_back(r, r, 4.0 * inv_h2);
      if (i > 1) trip.emplace_back(r, idx(i - 1, j), -inv_h2);
      if (i < M) trip.emplace_back(r, idx(i + 1, j), -inv_h2);
      if (j > 1) trip.emplace_back(r, idx(i, j - 1), -inv_h2);
      if (j < M) trip.emplace_back(r, idx(i, j + 1), -inv_h2);
    }
  }
  auto factor = std::make_shared<DirichletFactor>();
  factor->N = N;
  factor->A.resize(M * M, M * M);
  factor->A.setFromTriplets(trip.begin(), trip.end());
  factor->ldlt.compute(factor->A);
  if (factor->ldlt.info() != Eigen::Success) {
    throw SolverDiverged("poisson_dirichlet: factorization failed for N = " + std::to_string(N));
  }
  cache.emplace(N, factor);
  return factor;
}

}  // namespace

ScalarField poisson_dirichlet(const ScalarField& rhs) {
  const Grid& g = rhs.grid();
  const int N = g.N();
  const int M = N - 2;
  const auto factor = dirichlet_factor(N);

  Eigen::VectorXd b(M * M);
  for (int j = 1; j <= M; ++j) {
    for (int i = 1; i <= M; ++i) b[(j - 1) * M + (i - 1)] = -rhs(i, j);
  }
  const Eigen::VectorXd x = factor->ldlt.solve(b);
  const double bnorm = b.norm();
  const double res = (factor->A * x - b).norm();
  if (!std::isfinite(res) || res > 1e-10 * std::max(bnorm, 1e-300)) {
    if (bnorm != 0.0 || !std::isfinite(res)) {
      throw SolverDiverged("poisson_dirichlet: relative residual " + std::to_string(res / bnorm) +
                           " above 1e-10");
    }
  }
  ScalarField out(g);
  for (int j = 1; j <= M; ++j) {
    for (int i = 1; i <= M; ++i) out(i, j) = x[(j - 1) * M + (i - 1)];
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

template <class Fn>
void for_cells_in_ball(const Grid& g, const Ball& ball, Fn&& fn) {
  const int N = g.N();
  const double h = g.h();
  const int i0 = std::max(0, static_cast<int>(std::floor((ball.center[0] - ball.radius) / h)) - 1);
  const int i1 = std::min(N - 1, static_cast<int>(std::ceil((ball.center[0] + ball.radius) / h)) + 1);
  const int j0 = std::max(0, static_cast<int>(std::floor((ball.center[1] - ball.radius) / h)) - 1);
  const int j1 = std::min(N - 1, static_cast<int>(std::ceil((ball.center[1] + ball.radius) / h)) + 1);
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      if (ball.contains(g.x(i), g.y(j))) fn(g.index(i, j));
    }
  }
}

}  // namespace

std::size_t cells_in_ball(const Grid& grid, const Ball& ball) {
  std::size_t count = 0;
  for_cells_in_ball(grid, ball, [&](std::size_t) { ++count; });
  return count;
}

double lp_norm_on_ball(const Grid& grid, std::span<const double> mag, double p, const Ball& ball) {
  if (p < 1.0) throw std::invalid_argument("lp_norm_on_ball: p must be >= 1");
  std::size_t count = 0;
  CompensatedSum sum;
  const bool square = p == 2.0;
  for_cells_in_ball(grid, ball, [&](std::size_t c) {
    ++count;
    const double a = std::abs(mag[c]);
    sum.add(square ? a * a : std::pow(a, p));
  });
  if (count == 0) {
    throw EmptyBall("no cell center inside ball at (" + std::to_string(ball.center[0]) + ", " +
                    std::to_string(ball.center[1]) + ") radius " + std::to_string(ball.radius));
  }
  return sum.value() * grid.h() * grid.h();
}

double lp_norm_on_ball(const ScalarField& f, double p, const Ball& ball) {
  return lp_norm_on_ball(f.grid(), f.values(), p, ball);
}

double lp_norm_on_ball(const VecField& f, double p, const Ball& ball) {
  const auto mag = magnitude(f);
  return lp_norm_on_ball(f.grid(), mag, p, ball);
}

std::vector<double> magnitude(const ScalarField& f) {
  std::vector<double> out(f.values().begin(), f.values().end());
  for (auto& v : out) v = std::abs(v);
  return out;
}

std::vector<double> magnitude(const VecField& f) {
  std::vector<double> out(f.grid().cells());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = std::hypot(f[c][0], f[c][1]);
  return out;
}

std::vector<double> magnitude(std::span<const VecField> rows) {
  if (rows.empty()) return {};
  std::vector<double> out(rows.front().grid().cells(), 0.0);
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += r[c][0] * r[c][0] + r[c][1] * r[c][1];
  }
  for (auto& v : out) v = std::sqrt(v);
  return out;
}

double l2_norm(const ScalarField& f) { return std::sqrt(inner(f, f)); }

double l2_norm(const VecField& f) { return std::sqrt(inner(f, f)); }

double l2_norm(std::span<const VecField> rows) {
  double s = 0.0;
  for (const auto& r : rows) s += inner(r, r);
  return std::sqrt(s);
}

double inner(const ScalarField& f, const ScalarField& g) {
  if (!(f.grid() == g.grid())) throw DimensionMismatch("inner: grids differ");
  CompensatedSum sum;
  for (std::size_t c = 0; c < f.grid().cells(); ++c) sum.add(f[c] * g[c]);
  return sum.value() * f.grid().h() * f.grid().h();
}

double inner(const VecField& f, const VecField& g) {
  if (!(f.grid() == g.grid())) throw DimensionMismatch("inner: grids differ");
  CompensatedSum sum;
  for (std::size_t c = 0; c < f.grid().cells(); ++c) sum.add(f[c][0] * g[c][0] + f[c][1] * g[c][1]);
  return sum.value() * f.grid().h() * f.grid().h();
}

double interior_l2_norm(const ScalarField& f, double margin) {
  const Grid& g = f.grid();
  CompensatedSum sum;
  for (int j = 0; j < g.N(); ++j) {
    for (int i = 0; i < g.N(); ++i) {
      const double x = g.x(i), y = g.y(j);
      if (x < margin || y < margin || x > 1.0 - margin || y > 1.0 - margin) continue;
      sum.add(f(i, j) * f(i, j));
    }
  }
  return std::sqrt(sum.value()) * g.h();
}

ScalarField bump(const Grid& grid, Vec2 center, double width) {
  auto profile = [](double t) {
    if (std::abs(t) >= 1.0) return 0.0;
    const double s = 1.0 - t * t;
    return s * s * s * s;
  };
  return ScalarField::sample(grid, [&](double x, double y) {
    return profile((x - center[0]) / width) * profile((y - center[1]) / width);
  });
}

std::vector<ScalarField> test_bumps(const Grid& grid) {
  std::vector<ScalarField> out;
  constexpr std::array<double, 4> centers{0.2, 0.4, 0.6, 0.8};
  for (double cy : centers) {
    for (double cx : centers) out.push_back(bump(grid, {cx, cy}, 0.1));
  }
  return out;
}

}  // namespace cgauge
