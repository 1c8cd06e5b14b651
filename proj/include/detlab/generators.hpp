#pragma once

// Matrix-field families: the concentrating indicator counterexample,
// divergence-free cofactor-of-Hessian fields, periodic oscillations and the
// epsilon shift.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "detlab/fields.hpp"
#include "detlab/sym_matrix.hpp"
#include "detlab/torus.hpp"

namespace detlab {

/// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

/// Closed-form data of f_k Id with f_k = 2^{k(n-1)} on B_{2^-k}(x0).
struct AnalyticCounterexample {
  int n = 2;
  Point x0;
  int k = 1;

  double density() const;
  double support_radius() const;
  double exact_D() const;
  double exact_lp(double p) const;
  /// Mass of the radial surface measure div(f_k Id) = D f_k: density times sphere area.
  double exact_div_tv() const;
  /// Value at a point of the torus (minimal-image distance to x0).
  double value_at(std::span<const double> x) const;
};

struct CounterexampleSample {
  MatrixField field;
  AnalyticCounterexample analytic;
};

/// Nearest-node sampling of the indicator field; requires 2^-k <= 1/2 and m 2^-k >= 8.
CounterexampleSample counterexample_field(int n, const Point& x0, int k, const TorusGrid& grid);

using Mode = std::vector<int>;

/// cof(Hess u) with u = |x|^2/2 + amplitude * sum_modes prod_d sin(2 pi k_d x_d).
MatrixField cofactor_hessian_field(int n, double amplitude, const std::vector<Mode>& modes, const TorusGrid& grid);

/// Random smooth potential; mode components are nonzero with
/// |k_d| <= max_wavenumber, amplitude capped so that Hess u >= Id/2.
struct RandomPotential {
  double amplitude = 0.0;
  std::vector<Mode> modes;
};
RandomPotential random_potential(int n, std::uint64_t seed, double max_amplitude, int max_modes = 3,
                                 int max_wavenumber = 2);

/// diag(a(x_2), b(x_1)) for n = 2: each row depends only on the other axis, so div = 0.
MatrixField separable_diagonal_field(const TorusGrid& grid, const std::function<double(double)>& a,
                                     const std::function<double(double)>& b);

/// det(Hess phi* + S) = f with phi* mean zero; f evaluated analytically and S
/// the multiple of Id with det S = grid integral of f (Id up to aliasing).
struct ManufacturedProblem {
  ScalarField f;
  ScalarField phi_exact;
  SymMatrix S;
};
/// phi* = amplitude * prod_d sin(2 pi x_d): bandlimited, exact on any grid m >= 4.
ManufacturedProblem manufactured_sine_problem(const TorusGrid& grid, double amplitude);
/// phi* = amplitude * (prod_d g(x_d) - mean), g(t) = 1/(c - cos 2 pi t), c > 1:
/// analytic but not bandlimited, Fourier tail ~ (c + sqrt(c^2-1))^{-|k|}.
ManufacturedProblem manufactured_rational_problem(const TorusGrid& grid, double amplitude, double c = 1.2);

/// A_k(x) = B(k x mod 1) on the grid of k m points per axis (exact replication);
/// k must be a power of two.
MatrixField oscillation_sequence(const MatrixField& b, int k);
/// Same sequence on an explicit grid by trigonometric resampling of B.
MatrixField oscillation_sequence(const MatrixField& b, int k, const TorusGrid& out);

MatrixField epsilon_shift(const MatrixField& a, double eps);

enum class Family { Counterexample, Oscillation, Mollified, Constant };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

/// A sequence {A_k}: which family, its parameters and the indices to sample.
struct SequenceSpec {
  Family family = Family::Constant;
  int n = 2;
  int m = 64;
  std::vector<int> k_range;
  Point center;                      // counterexample
  std::optional<MatrixField> base;   // oscillation, mollified, constant
  std::string base_path;             // where base came from, if a file
  std::vector<double> mollify_eps;   // mollified: one radius per k

  /// Throws InvalidArgument naming the missing parameter.
  void validate() const;
  MatrixField member(int k) const;
};

}  // namespace detlab
