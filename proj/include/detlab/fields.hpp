#pragma once

// Field-level operations on the unit torus: averages, the determinant
// functional, row-wise divergence, L^p norms, mollification and the
// localized blow-up field used by the Monge-Ampere argument.

#include <limits>

#include "detlab/sym_matrix.hpp"
#include "detlab/torus.hpp"

namespace detlab {

struct DivergenceReport {
  VectorField abs_part;
  double tv_estimate = 0.0;
};

enum class Interpolation { Trigonometric, NearestNode };

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

SymMatrix mean_matrix(const MatrixField& a);

/// Integral of det(A)^{1/(n-1)}; n >= 2. Throws NotPsd beyond tol_psd,
/// clips tiny negative determinants to zero.
double functional_D(const MatrixField& a);
/// Node values det(A)^{1/(n-1)} with the same PSD handling.
ScalarField det_power_field(const MatrixField& a);

/// Throws NotPsd naming the first offending node.
void require_psd(const MatrixField& a, const char* what);

/// (div A)_i = sum_j d_j A_ij by Fourier differentiation.
DivergenceReport divergence(const MatrixField& a);

/// (int |A(x)|_op^p dx)^{1/p}; p = kInfinity gives the nodal max.
double lp_norm(const MatrixField& a, double p);

/// Periodic convolution with a normalized C-infinity bump of radius eps.
MatrixField mollify(const MatrixField& a, double eps);
ScalarField mollify(const ScalarField& f, double eps);

/// Smooth cutoff: 0 within `margin` of the cube faces, 1 on the centered
/// cube of side 1 - 4*margin, a C-infinity product of 1D ramps in between.
ScalarField bump_cutoff(const TorusGrid& grid, double margin);
/// The 1D ramp profile used by bump_cutoff and its first two derivatives.
struct CutoffProfile {
  double value, first, second;
};
CutoffProfile cutoff_profile(double x, double margin);

/// Node coordinates a_d + R * x_d (mod 1) for every axis of `grid`.
std::vector<std::vector<double>> blowup_targets(const TorusGrid& grid, std::span<const double> a, double r);

/// Sample a matrix field at the blow-up points a + R x of the target grid.
MatrixField sample_blowup(const MatrixField& ak, std::span<const double> a, double r, const TorusGrid& target,
                          Interpolation mode);

/// B(x) = phi(x) A_k(a + R x) + (1 - phi(x)) A_a on phi's grid.
MatrixField localized_field(const MatrixField& ak, const SymMatrix& aa, std::span<const double> a, double r,
                            const ScalarField& phi, Interpolation mode = Interpolation::Trigonometric);

}  // namespace detlab
