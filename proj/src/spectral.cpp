#include "detlab/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <numbers>
#include <utility>

#include "detlab/error.hpp"

namespace detlab::spectral {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

struct Fourier::Impl {
  fftw_complex* buffer = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::size_t size = 0;

  ~Impl() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (buffer) fftw_free(buffer);
  }
};

Fourier::Fourier(const TorusGrid& grid) : grid_(grid), m_(grid.points_per_axis()), impl_(std::make_unique<Impl>()) {
  impl_->size = grid.size();
  impl_->buffer = fftw_alloc_complex(impl_->size);
  if (!impl_->buffer) throw Error(ErrorCode::InvalidArgument, "FFT buffer allocation failed");
  std::vector<int> dims(grid.dim(), m_);
  impl_->forward = fftw_plan_dft(grid.dim(), dims.data(), impl_->buffer, impl_->buffer, FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->backward = fftw_plan_dft(grid.dim(), dims.data(), impl_->buffer, impl_->buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fourier::~Fourier() = default;

Fourier& Fourier::for_grid(const TorusGrid& grid) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<Fourier>> cache;
  auto key = std::make_pair(grid.dim(), grid.points_per_axis());
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_unique<Fourier>(grid)).first;
  return *it->second;
}

void Fourier::forward(std::span<const double> in, std::vector<Complex>& out) {
  const std::size_t n = impl_->size;
  for (std::size_t i = 0; i < n; ++i) {
    impl_->buffer[i][0] = in[i];
    impl_->buffer[i][1] = 0.0;
  }
  fftw_execute(impl_->forward);
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = Complex(impl_->buffer[i][0], impl_->buffer[i][1]);
}

void Fourier::inverse(std::span<const Complex> in, std::span<double> out) {
  const std::size_t n = impl_->size;
  for (std::size_t i = 0; i < n; ++i) {
    impl_->buffer[i][0] = in[i].real();
    impl_->buffer[i][1] = in[i].imag();
  }
  fftw_execute(impl_->backward);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = impl_->buffer[i][0] * scale;
}

Complex first_derivative_symbol(const Fourier& f, const MultiIndex& idx, int axis) {
  if (f.is_nyquist(idx[axis])) return {0.0, 0.0};
  return {0.0, kTwoPi * f.wavenumber(idx[axis])};
}

double second_derivative_symbol(const Fourier& f, const MultiIndex& idx, int a, int b) {
  if (a == b) {
    const double k = kTwoPi * f.wavenumber(idx[a]);
    return -k * k;
  }
  if (f.is_nyquist(idx[a]) || f.is_nyquist(idx[b])) return 0.0;
  return -kTwoPi * kTwoPi * f.wavenumber(idx[a]) * f.wavenumber(idx[b]);
}

std::vector<double> derivative(const TorusGrid& grid, std::span<const double> values, int axis) {
  Fourier& f = Fourier::for_grid(grid);
  std::vector<Complex> hat;
  f.forward(values, hat);
  for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= first_derivative_symbol(f, grid.multi_index(i), axis);
  std::vector<double> out(grid.size());
  f.inverse(hat, out);
  return out;
}

std::vector<std::vector<double>> gradient(const TorusGrid& grid, std::span<const double> values) {
  Fourier& f = Fourier::for_grid(grid);
  std::vector<Complex> hat;
  f.forward(values, hat);
  std::vector<std::vector<double>> out;
  std::vector<Complex> work(hat.size());
  for (int d = 0; d < grid.dim(); ++d) {
    for (std::size_t i = 0; i < hat.size(); ++i) work[i] = hat[i] * first_derivative_symbol(f, grid.multi_index(i), d);
    out.emplace_back(grid.size());
    f.inverse(work, out.back());
  }
  return out;
}

std::vector<std::vector<double>> hessian(const TorusGrid& grid, std::span<const double> values) {
  Fourier& f = Fourier::for_grid(grid);
  std::vector<Complex> hat;
  f.forward(values, hat);
  std::vector<std::vector<double>> out;
  std::vector<Complex> work(hat.size());
  for (int a = 0; a < grid.dim(); ++a) {
    for (int b = a; b < grid.dim(); ++b) {
      for (std::size_t i = 0; i < hat.size(); ++i) work[i] = hat[i] * second_derivative_symbol(f, grid.multi_index(i), a, b);
      out.emplace_back(grid.size());
      f.inverse(work, out.back());
    }
  }
  return out;
}

std::vector<double> solve_constant_coefficient(const TorusGrid& grid, std::span<const double> rhs,
                                               const SymMatrix& coeff) {
  if (coeff.dim() != grid.dim()) throw Error(ErrorCode::InvalidArgument, "coefficient dimension mismatch");
  Fourier& f = Fourier::for_grid(grid);
  std::vector<Complex> hat;
  f.forward(rhs, hat);
  const int n = grid.dim();
  for (std::size_t i = 0; i < hat.size(); ++i) {
    const MultiIndex idx = grid.multi_index(i);
    double sigma = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) sigma += coeff(a, b) * second_derivative_symbol(f, idx, a, b);
    hat[i] = sigma != 0.0 ? hat[i] / sigma : Complex(0.0, 0.0);
  }
  hat[0] = 0.0;
  std::vector<double> out(grid.size());
  f.inverse(hat, out);
  return out;
}

std::vector<double> convolve(const TorusGrid& grid, std::span<const double> values,
                             std::span<const Complex> kernel_hat) {
  Fourier& f = Fourier::for_grid(grid);
  std::vector<Complex> hat;
  f.forward(values, hat);
  for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= kernel_hat[i];
  std::vector<double> out(grid.size());
  f.inverse(hat, out);
  return out;
}

std::vector<double> cardinal_weights(int m, double x) {
  std::vector<double> w(m);
  for (int j = 0; j < m; ++j) {
    double t = x - static_cast<double>(j) / m;
    t -= std::round(t);
    if (std::abs(t) < 1e-15) {
      w[j] = 1.0;
      continue;
    }
    const double s = std::sin(std::numbers::pi * t);
    w[j] = std::sin(std::numbers::pi * m * t) * std::cos(std::numbers::pi * t) / (m * s);
  }
  return w;
}

namespace {

// Contract axis `axis` of a row-major array with shape `dims` against the
// weight rows (one row of length dims[axis] per target).
std::vector<double> contract_axis(std::span<const double> in, std::vector<int>& dims, int axis,
                                  const std::vector<std::vector<double>>& weights) {
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (int d = 0; d < axis; ++d) outer *= dims[d];
  for (std::size_t d = axis + 1; d < dims.size(); ++d) inner *= dims[d];
  const std::size_t len = dims[axis];
  const std::size_t targets = weights.size();
  std::vector<double> out(outer * targets * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t t = 0; t < targets; ++t) {
      const auto& w = weights[t];
      double* dst = &out[(o * targets + t) * inner];
      for (std::size_t j = 0; j < len; ++j) {
        const double wj = w[j];
        if (wj == 0.0) continue;
        const double* src = &in[(o * len + j) * inner];
        for (std::size_t i = 0; i < inner; ++i) dst[i] += wj * src[i];
      }
    }
  }
  dims[axis] = static_cast<int>(targets);
  return out;
}

void check_targets(const TorusGrid& grid, std::span<const double> values,
                   const std::vector<std::vector<double>>& axis_targets) {
  if (values.size() != grid.size()) throw Error(ErrorCode::GridMismatch, "values do not match grid size");
  if (static_cast<int>(axis_targets.size()) != grid.dim()) {
    throw Error(ErrorCode::InvalidArgument, "need one target list per axis");
  }
}

}  // namespace

std::vector<double> resample_tensor(const TorusGrid& grid, std::span<const double> values,
                                    const std::vector<std::vector<double>>& axis_targets) {
  check_targets(grid, values, axis_targets);
  const int m = grid.points_per_axis();
  std::vector<int> dims(grid.dim(), m);
  std::vector<double> data(values.begin(), values.end());
  for (int d = 0; d < grid.dim(); ++d) {
    std::vector<std::vector<double>> weights;
    weights.reserve(axis_targets[d].size());
    for (double x : axis_targets[d]) weights.push_back(cardinal_weights(m, x));
    data = contract_axis(data, dims, d, weights);
  }
  return data;
}

std::vector<double> resample_nearest(const TorusGrid& grid, std::span<const double> values,
                                     const std::vector<std::vector<double>>& axis_targets) {
  check_targets(grid, values, axis_targets);
  const int n = grid.dim();
  const int m = grid.points_per_axis();
  std::vector<std::vector<int>> nearest(n);
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) {
    for (double x : axis_targets[d]) {
      const long j = std::lround(x * m);
      nearest[d].push_back(static_cast<int>(((j % m) + m) % m));
    }
    total *= axis_targets[d].size();
  }
  std::vector<double> out(total);
  MultiIndex t{};
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    for (int d = n - 1; d >= 0; --d) {
      t[d] = static_cast<int>(rem % axis_targets[d].size());
      rem /= axis_targets[d].size();
    }
    MultiIndex src{};
    for (int d = 0; d < n; ++d) src[d] = nearest[d][t[d]];
    out[lin] = values[grid.linear_index(src)];
  }
  return out;
}

double interpolate_at(const TorusGrid& grid, std::span<const double> values, std::span<const double> point) {
  std::vector<std::vector<double>> targets;
  for (double x : point) targets.push_back({x});
  return resample_tensor(grid, values, targets)[0];
}

}  // namespace detlab::spectral
