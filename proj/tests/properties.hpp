#pragma once

// Randomized property checks with a fixed seed. Each check reports the worst
// ratio measured / allowed over its samples; it passes when that ratio <= 1.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "detlab/fields.hpp"
#include "detlab/spectral.hpp"
#include "detlab/sym_matrix.hpp"
#include "support.hpp"

namespace detlab::testing {

struct PropertyResult {
  std::string name;
  int samples = 0;
  double worst_ratio = 0.0;
  bool passed() const { return worst_ratio <= 1.0; }
};

inline PropertyResult prop_cofactor_identity(int samples = 10000) {
  std::mt19937_64 rng(kSeed);
  PropertyResult r{"A cof(A) = det(A) Id, n = 2..6", samples, 0.0};
  for (int s = 0; s < samples; ++s) {
    const int n = 2 + s % 5;
    const SymMatrix a = random_symmetric(rng, n, 3.0);
    const std::vector<double> p = dense_product(a, cofactor(a));
    const double d = determinant(a);
    double err = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) err = std::max(err, std::abs(p[i * n + j] - (i == j ? d : 0.0)));
    const double allowed = 1e-10 * (1.0 + std::pow(a.frobenius_norm(), n));
    r.worst_ratio = std::max(r.worst_ratio, err / allowed);
  }
  return r;
}

inline PropertyResult prop_char_poly(int samples = 10000) {
  std::mt19937_64 rng(kSeed + 1);
  PropertyResult r{"char poly c_i = (-1)^{i+n} M_{n-i}, n = 2..6", samples, 0.0};
  for (int s = 0; s < samples; ++s) {
    const int n = 2 + s % 5;
    const SymMatrix a = random_spd(rng, n);
    const std::vector<double> c = char_poly_coeffs(a);
    const std::vector<double> m = elementary_symmetric_all(a);
    for (int i = 0; i <= n; ++i) {
      const double expected = (((i + n) % 2) ? -1.0 : 1.0) * m[n - i];
      const double allowed = 1e-10 * (1.0 + std::abs(expected));
      r.worst_ratio = std::max(r.worst_ratio, std::abs(c[i] - expected) / allowed);
    }
  }
  return r;
}

/// |det X - det Y| <= n (|X|^{n-1} + |Y|^{n-1}) |X - Y| in operator norm.
inline PropertyResult prop_determinant_difference(int samples = 10000) {
  std::mt19937_64 rng(kSeed + 2);
  std::uniform_real_distribution<double> scale(0.01, 1.0), unit(0.0, 1.0);
  PropertyResult r{"determinant difference bound, c = n, n in {2,3}", samples, 0.0};
  for (int s = 0; s < samples; ++s) {
    const int n = 2 + s % 2;
    SymMatrix x = random_symmetric(rng, n, 1.0);
    x *= 10.0 * unit(rng) / std::max(x.operator_norm(), 1e-300);
    // Half the pairs are close, where the bound is tight to first order.
    SymMatrix y = (s % 4 < 2) ? x + random_symmetric(rng, n, 1e-3 * scale(rng)) : random_symmetric(rng, n, 1.0);
    if (y.operator_norm() > 10.0) y *= 10.0 / y.operator_norm();
    const double lhs = std::abs(determinant(x) - determinant(y));
    const double rhs = n * (std::pow(x.operator_norm(), n - 1) + std::pow(y.operator_norm(), n - 1)) *
                       (x - y).operator_norm();
    r.worst_ratio = std::max(r.worst_ratio, lhs / (rhs + 1e-12));
  }
  return r;
}

inline PropertyResult prop_determinant_monotone(int samples = 10000) {
  std::mt19937_64 rng(kSeed + 3);
  PropertyResult r{"A >= B >= 0 implies det A >= det B", samples, 0.0};
  for (int s = 0; s < samples; ++s) {
    const int n = 2 + s % 4;
    const SymMatrix b = random_spd(rng, n, 0.0);
    const SymMatrix a = b + random_spd(rng, n, 0.0) * 0.1;
    const double deficit = std::max(0.0, determinant(b) - determinant(a));
    r.worst_ratio = std::max(r.worst_ratio, deficit / 1e-10);
  }
  return r;
}

inline PropertyResult prop_homogeneity(int samples = 5000) {
  std::mt19937_64 rng(kSeed + 4);
  std::uniform_real_distribution<double> t_dist(0.1, 5.0);
  PropertyResult r{"M_i(t A) = t^i M_i(A)", samples, 0.0};
  for (int s = 0; s < samples; ++s) {
    const int n = 2 + s % 5;
    const SymMatrix a = random_spd(rng, n);
    const double t = t_dist(rng);
    const std::vector<double> m = elementary_symmetric_all(a);
    const std::vector<double> mt = elementary_symmetric_all(a * t);
    for (int i = 0; i <= n; ++i) {
      const double expected = std::pow(t, i) * m[i];
      r.worst_ratio = std::max(r.worst_ratio, std::abs(mt[i] - expected) / (1e-10 * std::abs(expected)));
    }
  }
  return r;
}

/// Random trigonometric polynomial with `modes` terms, wavenumbers <= kmax.
inline ScalarField random_trig_field(std::mt19937_64& rng, const TorusGrid& grid, int modes, int kmax, double amp) {
  const int n = grid.dim();
  std::uniform_int_distribution<int> kd(-kmax, kmax);
  std::uniform_real_distribution<double> coef(-amp, amp), phase(0.0, 1.0);
  std::vector<std::vector<int>> ks;
  std::vector<double> cs, ph;
  for (int j = 0; j < modes; ++j) {
    std::vector<int> k(n);
    for (int& v : k) v = kd(rng);
    ks.push_back(k);
    cs.push_back(coef(rng));
    ph.push_back(phase(rng));
  }
  return sample(grid, [&](const Point& x) {
    double v = 0.0;
    for (int j = 0; j < modes; ++j) {
      double arg = ph[j];
      for (int d = 0; d < n; ++d) arg += ks[j][d] * x[d];
      v += cs[j] * std::cos(2.0 * std::numbers::pi * arg);
    }
    return v;
  });
}

inline MatrixField random_trig_matrix_field(std::mt19937_64& rng, const TorusGrid& grid, int kmax) {
  const int n = grid.dim();
  MatrixField b(grid, SymMatrix::identity(n, 2.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      ScalarField c = random_trig_field(rng, grid, 3, kmax, 0.3);
      if (i == j) for (double& v : c.values) v += 2.0;
      b.set_component(i, j, c.values);
    }
  }
  return b;
}

/// |int tr(Hess phi B) + int (div B, grad phi)| <= 1e-8 (1 + |B|_inf)(1 + |phi|_inf).
inline PropertyResult prop_integration_by_parts(int samples = 40) {
  std::mt19937_64 rng(kSeed + 5);
  PropertyResult r{"integration by parts, n in {2,3}", samples, 0.0};
  for (int s = 0; s < samples; ++s) {
    const int n = 2 + s % 2;
    const TorusGrid grid(n, n == 2 ? 64 : 16);
    const ScalarField phi = random_trig_field(rng, grid, 4, n == 2 ? 6 : 3, 1.0);
    const MatrixField b = random_trig_matrix_field(rng, grid, n == 2 ? 6 : 3);
    const auto h = spectral::hessian(grid, phi.values);
    const auto g = spectral::gradient(grid, phi.values);
    const DivergenceReport div = divergence(b);
    std::vector<double> terms(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double t = 0.0;
      std::size_t c = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j, ++c) t += (i == j ? 1.0 : 2.0) * b.values[k](i, j) * h[c][k];
      for (int i = 0; i < n; ++i) t += div.abs_part.at(k, i) * g[i][k];
      terms[k] = t;
    }
    const double defect = std::abs(grid_mean(terms));
    const double allowed = 1e-8 * (1.0 + lp_norm(b, kInfinity)) * (1.0 + phi.max_abs());
    r.worst_ratio = std::max(r.worst_ratio, defect / allowed);
  }
  return r;
}

/// int det(Hess phi) = 0 at n = 2.
inline PropertyResult prop_null_lagrangian(int samples = 40) {
  std::mt19937_64 rng(kSeed + 6);
  PropertyResult r{"null Lagrangian int det(Hess phi) = 0, n = 2", samples, 0.0};
  const TorusGrid grid(2, 64);
  for (int s = 0; s < samples; ++s) {
    const ScalarField phi = random_trig_field(rng, grid, 5, 8, 0.05);
    const auto h = spectral::hessian(grid, phi.values);
    std::vector<double> d(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) d[k] = h[0][k] * h[2][k] - h[1][k] * h[1][k];
    r.worst_ratio = std::max(r.worst_ratio, std::abs(grid_mean(d)) / 1e-8);
  }
  return r;
}

/// |mollify(A, eps)|_{L^p} <= |A|_{L^p} + 1e-8 for p in {1, 2, 4, inf}.
inline PropertyResult prop_mollify_contraction(int samples = 24) {
  std::mt19937_64 rng(kSeed + 7);
  std::uniform_real_distribution<double> eps_dist(2.0 / 64, 0.3);
  PropertyResult r{"mollification contracts L^p", samples, 0.0};
  const TorusGrid grid(2, 64);
  for (int s = 0; s < samples; ++s) {
    const MatrixField a = random_trig_matrix_field(rng, grid, 10);
    const MatrixField ma = mollify(a, eps_dist(rng));
    for (double p : {1.0, 2.0, 4.0, kInfinity}) {
      const double excess = std::max(0.0, lp_norm(ma, p) - lp_norm(a, p));
      r.worst_ratio = std::max(r.worst_ratio, excess / 1e-8);
    }
  }
  return r;
}

inline std::vector<PropertyResult> all_properties() {
  return {prop_cofactor_identity(),     prop_char_poly(),          prop_determinant_difference(),
          prop_determinant_monotone(),  prop_homogeneity(),        prop_integration_by_parts(),
          prop_null_lagrangian(),       prop_mollify_contraction()};
}

}  // namespace detlab::testing
