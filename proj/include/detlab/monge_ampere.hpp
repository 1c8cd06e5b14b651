#pragma once

// Periodic Monge-Ampere problem det(Hess phi + S) = f on the unit torus,
// solvable when det(S) equals the integral of f. Damped Newton on the
// cofactor linearization; each linear step is a right-preconditioned GMRES
// solve whose preconditioner tr(cof(S) Hess .) is inverted in Fourier space.

#include <optional>

#include "detlab/error.hpp"
#include "detlab/fields.hpp"
#include "detlab/sym_matrix.hpp"
#include "detlab/torus.hpp"

namespace detlab {

enum class Normalization { MeanZero, VanishAt };

struct MAProblem {
  ScalarField f;
  SymMatrix S;
  Normalization normalization = Normalization::MeanZero;
  Point anchor;                    // used by VanishAt
  bool regularize = false;         // pre-mollify f with eps = 4/m (indicator-type data)
  std::optional<double> lambda;    // carried through when S came from lam mode

  /// min f > 0, S positive definite, |det S - int f| <= 1e-10 int f.
  void validate() const;
};

struct ReferenceMatrix {
  SymMatrix S;
  std::optional<double> lambda;
};

/// S = (int f)^{1/n} Id.
ReferenceMatrix select_reference_isotropic(const ScalarField& f);
/// S = lambda cof(mean B) with lambda chosen so that det S = int f; requires
/// f = det(B)^{1/(n-1)} pointwise.
ReferenceMatrix select_reference_lam(const ScalarField& f, const MatrixField& b);

struct MASolverOptions {
  /// Target for residual_inf; <= 0 selects 1e-9 (n = 2) or 1e-7 (n = 3).
  double tolerance = 0.0;
  int max_newton = 50;
  int max_halvings = 30;
  int gmres_restart = 50;
  int gmres_max_iterations = 600;
  double gmres_relative_tolerance = 1e-12;
};

struct MAResult {
  ScalarField phi;
  SymMatrix S;
  std::optional<double> lambda;
  double residual_inf = 0.0;
  double residual_l2 = 0.0;
  int newton_iters = 0;
  int linear_iters = 0;
  double min_hessian_eig = 0.0;
  bool regularized = false;
  /// max over iterates of |int det(Hess phi + S) - det S| / det S.
  double max_compatibility_defect = 0.0;
};

/// NewtonStall / PositivityLoss, carrying the best iterate found.
class MASolveError : public Error {
 public:
  MASolveError(ErrorCode code, const std::string& what, MAResult best)
      : Error(code, what), best_(std::move(best)) {}
  const MAResult& best() const noexcept { return best_; }

 private:
  MAResult best_;
};

MAResult solve_periodic_ma(const MAProblem& problem, const MASolverOptions& options = {});

/// Hess phi + S at every node.
MatrixField shifted_hessian(const ScalarField& phi, const SymMatrix& S);

struct MADiagnostics {
  /// min over nodes of tr((Hess phi + S) B)/n - f.
  double amgm_min_slack = 0.0;
  /// |grad phi|_inf / |S|_op.
  double grad_ratio = 0.0;
  /// |int tr(Hess phi B) + int (div B, grad phi)|.
  double ibp_defect = 0.0;
  double trace_integral = 0.0;    // int tr(Hess phi B)
  double div_pairing = 0.0;       // int (div B, grad phi)
  double max_f = 0.0;
  double grad_inf = 0.0;
};

MADiagnostics ma_diagnostics(const MAResult& result, const MatrixField& b);

}  // namespace detlab
