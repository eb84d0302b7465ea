#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "cgauge/grid.hpp"
#include "cgauge/numeric.hpp"

namespace testing {

inline constexpr std::array<int, 3> kRefinement{32, 64, 128};

/// Least-squares order over N = 32, 64, 128 of err(N).
template <class F>
double refinement_order(F err) {
  std::vector<double> h, e;
  for (int N : kRefinement) {
    h.push_back(1.0 / N);
    e.push_back(err(N));
  }
  return cgauge::fitted_order(h, e);
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Cells at least `rings` away from every edge.
inline bool interior(const cgauge::Grid& g, int i, int j, int rings = 1) {
  return i >= rings && j >= rings && i < g.N() - rings && j < g.N() - rings;
}

inline cgauge::ScalarField noise(const cgauge::Grid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  cgauge::ScalarField f(g);
  for (std::size_t c = 0; c < g.cells(); ++c) f[c] = d(rng);
  return f;
}

}  // namespace testing
