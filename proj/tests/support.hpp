#pragma once

// Seeded random inputs and brute-force oracles shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "detlab/sym_matrix.hpp"
#include "detlab/torus.hpp"

namespace detlab::testing {

inline constexpr std::uint64_t kSeed = 20240611;

inline SymMatrix random_symmetric(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  SymMatrix a(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) a.set(i, j, u(rng));
  return a;
}

/// G G^T + shift Id with G uniform in [-1,1].
inline SymMatrix random_spd(std::mt19937_64& rng, int n, double shift = 0.1) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> g(static_cast<std::size_t>(n) * n);
  for (double& v : g) v = u(rng);
  SymMatrix a(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int l = 0; l < n; ++l) s += g[i * n + l] * g[j * n + l];
      a.set(i, j, s + (i == j ? shift : 0.0));
    }
  }
  return a;
}

/// Sum over permutations with signs.
inline double leibniz_det(const SymMatrix& a) {
  const int n = a.dim();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  do {
    int inversions = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) inversions += perm[i] > perm[j];
    double term = (inversions % 2) ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) term *= a(i, perm[i]);
    total += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

/// (A B)_{ij} for symmetric inputs, dense row-major.
inline std::vector<double> dense_product(const SymMatrix& a, const SymMatrix& b) {
  const int n = a.dim();
  std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) out[i * n + j] += a(i, l) * b(l, j);
  return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template <class Fn>
ScalarField sample(const TorusGrid& grid, Fn fn) {
  ScalarField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] = fn(grid.node(i));
  return out;
}

}  // namespace detlab::testing
