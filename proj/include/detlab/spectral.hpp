#pragma once

// Fourier calculus on TorusGrid: derivatives, constant-coefficient
// second-order solves, periodic convolution and trigonometric interpolation.
//
// Nyquist convention (m even): first derivatives and mixed second derivatives
// drop the m/2 mode on the differentiated axes; pure second derivatives keep
// it with symbol -(pi m)^2. This keeps the first-derivative operator
// skew-adjoint and the constant-coefficient operator invertible on mean-zero
// fields.

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "detlab/sym_matrix.hpp"
#include "detlab/torus.hpp"

namespace detlab::spectral {

using Complex = std::complex<double>;

/// FFTW plan pair for one grid shape. Instances come from for_grid() and are
/// cached per thread; they are not shareable across threads.
class Fourier {
 public:
  explicit Fourier(const TorusGrid& grid);
  ~Fourier();
  Fourier(const Fourier&) = delete;
  Fourier& operator=(const Fourier&) = delete;

  static Fourier& for_grid(const TorusGrid& grid);

  const TorusGrid& grid() const noexcept { return grid_; }
  /// Unnormalized forward transform of real data.
  void forward(std::span<const double> in, std::vector<Complex>& out);
  /// Inverse transform including the 1/N factor; keeps the real part.
  void inverse(std::span<const Complex> in, std::span<double> out);

  /// Signed wavenumber of index i along an axis; index m/2 maps to -m/2.
  int wavenumber(int i) const noexcept { return i < m_ / 2 ? i : i - m_; }
  bool is_nyquist(int i) const noexcept { return i == m_ / 2; }

 private:
  struct Impl;
  TorusGrid grid_;
  int m_;
  std::unique_ptr<Impl> impl_;
};

/// Fourier multiplier of d/dx_axis at the mode with index vector idx.
Complex first_derivative_symbol(const Fourier& f, const MultiIndex& idx, int axis);
/// Fourier multiplier of d^2/(dx_a dx_b).
double second_derivative_symbol(const Fourier& f, const MultiIndex& idx, int a, int b);

std::vector<double> derivative(const TorusGrid& grid, std::span<const double> values, int axis);
/// n arrays, one per axis.
std::vector<std::vector<double>> gradient(const TorusGrid& grid, std::span<const double> values);
/// Packed upper triangle (same order as SymMatrix::packed) of second derivatives.
std::vector<std::vector<double>> hessian(const TorusGrid& grid, std::span<const double> values);

/// Mean-zero u with tr(C * Hess u) = rhs - mean(rhs), by Fourier division.
std::vector<double> solve_constant_coefficient(const TorusGrid& grid, std::span<const double> rhs,
                                               const SymMatrix& coeff);

/// Periodic discrete convolution with a kernel given by its forward transform.
std::vector<double> convolve(const TorusGrid& grid, std::span<const double> values,
                             std::span<const Complex> kernel_hat);

/// Cardinal weights of the degree-m trigonometric interpolant at x.
std::vector<double> cardinal_weights(int m, double x);

/// Evaluate the trigonometric interpolant on the tensor product of per-axis
/// target coordinates; output is row-major over the target lists.
std::vector<double> resample_tensor(const TorusGrid& grid, std::span<const double> values,
                                    const std::vector<std::vector<double>>& axis_targets);
/// Same target layout, value taken from the nearest grid node.
std::vector<double> resample_nearest(const TorusGrid& grid, std::span<const double> values,
                                     const std::vector<std::vector<double>>& axis_targets);

double interpolate_at(const TorusGrid& grid, std::span<const double> values, std::span<const double> point);

}  // namespace detlab::spectral
