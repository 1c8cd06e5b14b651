#include "detlab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detlab/error.hpp"
#include "detlab/spectral.hpp"

namespace detlab {

namespace {

std::string node_label(const TorusGrid& grid, std::size_t i) {
  const Point p = grid.node(i);
  std::string s = std::to_string(i) + " (";
  for (std::size_t d = 0; d < p.size(); ++d) {
    if (d) s += ",";
    s += std::to_string(p[d]);
  }
  return s + ")";
}

double det_power(const SymMatrix& a, std::size_t node, const TorusGrid& grid) {
  const Spectrum s = spectrum(a);
  const double norm = std::max(std::abs(s.min()), std::abs(s.max()));
  if (s.min() < -1e-10 * (1.0 + norm)) {
    throw Error(ErrorCode::NotPsd, "minimum eigenvalue " + std::to_string(s.min()) + " at node " +
                                       node_label(grid, node));
  }
  double det = 0.0;
  if (s.min() >= 0.0) {
    det = std::max(determinant(a), 0.0);
  }
  const int n = a.dim();
  if (n == 2) return det;
  return std::pow(det, 1.0 / (n - 1));
}

// 1 / (1 + exp(1/t - 1/(1-t))): the standard C-infinity step on [0,1].
struct Step {
  double h, dh, d2h;
};

Step smooth_step(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const double e = 1.0 / t - 1.0 / (1.0 - t);
  if (e > 700.0) return {0.0, 0.0, 0.0};
  if (e < -700.0) return {1.0, 0.0, 0.0};
  const double h = 1.0 / (1.0 + std::exp(e));
  const double q = 1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t));
  const double dq = -2.0 / (t * t * t) + 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t));
  const double dh = h * (1.0 - h) * q;
  const double d2h = dh * (1.0 - 2.0 * h) * q + h * (1.0 - h) * dq;
  return {h, dh, d2h};
}

std::vector<double> mollifier_kernel(const TorusGrid& grid, double eps) {
  std::vector<double> k(grid.size(), 0.0);
  const Point origin(grid.dim(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = torus_distance(grid.node(i), origin) / eps;
    if (r < 1.0) k[i] = std::exp(-1.0 / (1.0 - r * r));
  }
  const double total = compensated_sum(k);
  for (double& v : k) v /= total;
  return k;
}

void check_mollifier_radius(const TorusGrid& grid, double eps) {
  if (!(eps >= 2.0 / grid.points_per_axis())) {
    throw Error(ErrorCode::UnderResolvedKernel,
                "eps " + std::to_string(eps) + " below 2/m = " + std::to_string(2.0 / grid.points_per_axis()));
  }
  if (eps >= 0.5) throw Error(ErrorCode::InvalidArgument, "mollifier radius must be below 1/2");
}

}  // namespace

SymMatrix mean_matrix(const MatrixField& a) {
  const int n = a.grid.dim();
  SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m.set(i, j, grid_mean(a.component(i, j)));
  return m;
}

void require_psd(const MatrixField& a, const char* what) {
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (!is_psd(a.values[i])) {
      throw Error(ErrorCode::NotPsd, std::string(what) + ": minimum eigenvalue " +
                                         std::to_string(spectrum(a.values[i]).min()) + " at node " +
                                         node_label(a.grid, i));
    }
  }
}

ScalarField det_power_field(const MatrixField& a) {
  if (a.grid.dim() < 2) throw Error(ErrorCode::UnsupportedDimension, "det^{1/(n-1)} needs n >= 2");
  ScalarField out(a.grid);
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = det_power(a.values[i], i, a.grid);
  return out;
}

double functional_D(const MatrixField& a) { return det_power_field(a).integral(); }

DivergenceReport divergence(const MatrixField& a) {
  const TorusGrid& grid = a.grid;
  const int n = grid.dim();
  spectral::Fourier& f = spectral::Fourier::for_grid(grid);

  std::vector<std::vector<spectral::Complex>> comp_hat;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      comp_hat.emplace_back();
      f.forward(a.component(i, j), comp_hat.back());
    }
  }
  auto packed = [n](int i, int j) {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i * n - i * (i - 1) / 2 + (j - i));
  };

  DivergenceReport rep{VectorField(grid), 0.0};
  std::vector<spectral::Complex> row(grid.size());
  std::vector<double> row_values(grid.size());
  for (int i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const MultiIndex idx = grid.multi_index(k);
      spectral::Complex s = 0.0;
      for (int j = 0; j < n; ++j) s += comp_hat[packed(i, j)][k] * spectral::first_derivative_symbol(f, idx, j);
      row[k] = s;
    }
    f.inverse(row, row_values);
    rep.abs_part.set_component(i, row_values);
  }

  std::vector<double> norms(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rep.abs_part.at(k, i) * rep.abs_part.at(k, i);
    norms[k] = std::sqrt(s);
  }
  rep.tv_estimate = grid_mean(norms);
  return rep;
}

double lp_norm(const MatrixField& a, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "L^p exponent must be >= 1");
  std::vector<double> norms(a.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) norms[i] = a.values[i].operator_norm();
  if (std::isinf(p)) return *std::max_element(norms.begin(), norms.end());
  for (double& v : norms) v = std::pow(v, p);
  return std::pow(grid_mean(norms), 1.0 / p);
}

MatrixField mollify(const MatrixField& a, double eps) {
  check_mollifier_radius(a.grid, eps);
  spectral::Fourier& f = spectral::Fourier::for_grid(a.grid);
  std::vector<spectral::Complex> kernel_hat;
  f.forward(mollifier_kernel(a.grid, eps), kernel_hat);
  MatrixField out = a;
  const int n = a.grid.dim();
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      out.set_component(i, j, spectral::convolve(a.grid, a.component(i, j), kernel_hat));
    }
  }
  return out;
}

ScalarField mollify(const ScalarField& fld, double eps) {
  check_mollifier_radius(fld.grid, eps);
  spectral::Fourier& f = spectral::Fourier::for_grid(fld.grid);
  std::vector<spectral::Complex> kernel_hat;
  f.forward(mollifier_kernel(fld.grid, eps), kernel_hat);
  return ScalarField(fld.grid, spectral::convolve(fld.grid, fld.values, kernel_hat));
}

CutoffProfile cutoff_profile(double x, double margin) {
  // Product of a rising ramp on [margin, 2 margin] and a falling ramp on
  // [1 - 2 margin, 1 - margin].
  x -= std::floor(x);
  const Step up = smooth_step((x - margin) / margin);
  const Step down = smooth_step((1.0 - margin - x) / margin);
  const double u1 = up.dh / margin, u2 = up.d2h / (margin * margin);
  const double v1 = -down.dh / margin, v2 = down.d2h / (margin * margin);
  return {up.h * down.h, u1 * down.h + up.h * v1, u2 * down.h + 2.0 * u1 * v1 + up.h * v2};
}

ScalarField bump_cutoff(const TorusGrid& grid, double margin) {
  if (!(margin > 0.0 && margin < 0.5)) throw Error(ErrorCode::InvalidArgument, "cutoff margin must lie in (0, 1/2)");
  const int m = grid.points_per_axis();
  std::vector<double> profile(m);
  for (int i = 0; i < m; ++i) profile[i] = cutoff_profile(grid.coordinate(i), margin).value;
  ScalarField out(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const MultiIndex idx = grid.multi_index(k);
    double v = 1.0;
    for (int d = 0; d < grid.dim(); ++d) v *= profile[idx[d]];
    out.values[k] = v;
  }
  return out;
}

std::vector<std::vector<double>> blowup_targets(const TorusGrid& grid, std::span<const double> a, double r) {
  std::vector<std::vector<double>> targets(grid.dim());
  for (int d = 0; d < grid.dim(); ++d) {
    for (int i = 0; i < grid.points_per_axis(); ++i) {
      double y = a[d] + r * grid.coordinate(i);
      targets[d].push_back(y - std::floor(y));
    }
  }
  return targets;
}

MatrixField sample_blowup(const MatrixField& ak, std::span<const double> a, double r, const TorusGrid& target,
                          Interpolation mode) {
  const int n = ak.grid.dim();
  if (target.dim() != n || static_cast<int>(a.size()) != n) {
    throw Error(ErrorCode::InvalidArgument, "blow-up point and grids must share the field dimension");
  }
  const auto targets = blowup_targets(target, a, r);
  MatrixField out(target, SymMatrix(n), ak.psd_flag);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const std::vector<double> c = ak.component(i, j);
      out.set_component(i, j,
                        mode == Interpolation::Trigonometric ? spectral::resample_tensor(ak.grid, c, targets)
                                                             : spectral::resample_nearest(ak.grid, c, targets));
    }
  }
  return out;
}

MatrixField localized_field(const MatrixField& ak, const SymMatrix& aa, std::span<const double> a, double r,
                            const ScalarField& phi, Interpolation mode) {
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "blow-up radius R must be positive");
  for (double v : phi.values) {
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) throw Error(ErrorCode::InvalidArgument, "cutoff values must lie in [0,1]");
  }
  if (!is_psd(aa)) throw Error(ErrorCode::NotPsd, "frozen matrix A(a) is not PSD");
  require_psd(ak, "A_k");

  const MatrixField sampled = sample_blowup(ak, a, r, phi.grid, mode);
  MatrixField out(phi.grid, aa, true);
  for (std::size_t k = 0; k < phi.grid.size(); ++k) {
    const double w = phi.values[k];
    if (w == 0.0) continue;
    out.values[k] = w * sampled.values[k] + (1.0 - w) * aa;
  }
  return out;
}

}  // namespace detlab
