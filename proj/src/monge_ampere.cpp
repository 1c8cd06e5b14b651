#include "detlab/monge_ampere.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstdio>
#include <limits>
#include <string>

#include "detlab/spectral.hpp"

namespace detlab {

namespace {

using Vec = std::vector<double>;
using LinearMap = std::function<void(const Vec&, Vec&)>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

void remove_mean(Vec& v) {
  const double mean = grid_mean(v);
  for (double& x : v) x -= mean;
}

struct GmresOutcome {
  int iterations = 0;
  double relative_residual = 0.0;
};

// Restarted GMRES with right preconditioning: solves op(prec(y)) = b and
// returns x = prec(y).
GmresOutcome gmres(const LinearMap& op, const LinearMap& prec, const Vec& b, Vec& x, int restart, int max_iters,
                   double rtol) {
  const std::size_t n = b.size();
  x.assign(n, 0.0);
  const double bnorm = norm2(b);
  GmresOutcome out;
  if (bnorm == 0.0) return out;

  Vec r = b;
  Vec y_total(n, 0.0);
  Vec w(n), z(n);
  double beta = bnorm;
  while (out.iterations < max_iters) {
    std::vector<Vec> v(1, r);
    for (double& e : v[0]) e /= beta;
    std::vector<std::vector<double>> h(restart + 1, std::vector<double>(restart, 0.0));
    std::vector<double> cs(restart, 0.0), sn(restart, 0.0), g(restart + 1, 0.0);
    g[0] = beta;
    int j = 0;
    for (; j < restart && out.iterations < max_iters; ++j) {
      ++out.iterations;
      prec(v[j], z);
      op(z, w);
      for (int i = 0; i <= j; ++i) {
        h[i][j] = dot(w, v[i]);
        for (std::size_t k = 0; k < n; ++k) w[k] -= h[i][j] * v[i][k];
      }
      // Second Gram-Schmidt pass keeps the basis orthogonal at tight tolerances.
      for (int i = 0; i <= j; ++i) {
        const double c = dot(w, v[i]);
        h[i][j] += c;
        for (std::size_t k = 0; k < n; ++k) w[k] -= c * v[i][k];
      }
      h[j + 1][j] = norm2(w);
      v.push_back(w);
      if (h[j + 1][j] > 0.0)
        for (double& e : v.back()) e /= h[j + 1][j];

      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
        h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
        h[i][j] = t;
      }
      const double denom = std::hypot(h[j][j], h[j + 1][j]);
      cs[j] = denom == 0.0 ? 1.0 : h[j][j] / denom;
      sn[j] = denom == 0.0 ? 0.0 : h[j + 1][j] / denom;
      h[j][j] = denom;
      h[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      if (std::abs(g[j + 1]) <= rtol * bnorm) {
        ++j;
        break;
      }
    }
    // Back substitution for the Krylov coefficients.
    std::vector<double> coef(j, 0.0);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < j; ++k) s -= h[i][k] * coef[k];
      coef[i] = h[i][i] != 0.0 ? s / h[i][i] : 0.0;
    }
    for (int i = 0; i < j; ++i)
      for (std::size_t k = 0; k < n; ++k) y_total[k] += coef[i] * v[i][k];

    // True residual for the restart.
    prec(y_total, z);
    op(z, w);
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - w[k];
    beta = norm2(r);
    out.relative_residual = beta / bnorm;
    if (beta <= rtol * bnorm) break;
  }
  prec(y_total, x);
  return out;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

struct Iterate {
  ScalarField phi;
  std::vector<SymMatrix> hess;  // Hess phi + S per node
  Vec residual;                 // f - det(...)
  double residual_inf = 0.0;
  double residual_l2 = 0.0;
  double min_eig = 0.0;
  double compatibility_defect = 0.0;
};

Iterate evaluate(const ScalarField& phi, const SymMatrix& S, const Vec& f, double fmax, double det_s) {
  Iterate it;
  it.phi = phi;
  const TorusGrid& grid = phi.grid;
  const int n = grid.dim();
  const auto h = spectral::hessian(grid, phi.values);
  it.hess.assign(grid.size(), S);
  it.residual.resize(grid.size());
  Vec dets(grid.size());
  it.min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    SymMatrix& m = it.hess[k];
    std::size_t c = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b, ++c) m.set(a, b, m(a, b) + h[c][k]);
    dets[k] = determinant(m);
    it.residual[k] = f[k] - dets[k];
    it.min_eig = std::min(it.min_eig, spectrum(m).min());
  }
  double inf = 0.0;
  Vec sq(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    inf = std::max(inf, std::abs(it.residual[k]));
    sq[k] = it.residual[k] * it.residual[k];
  }
  it.residual_inf = inf / fmax;
  it.residual_l2 = std::sqrt(grid_mean(sq)) / fmax;
  it.compatibility_defect = std::abs(grid_mean(dets) - det_s) / det_s;
  return it;
}

MAResult to_result(const Iterate& it, const MAProblem& problem, bool regularized, int newton, int linear,
                   double max_defect) {
  MAResult r;
  r.phi = it.phi;
  r.S = problem.S;
  r.lambda = problem.lambda;
  r.residual_inf = it.residual_inf;
  r.residual_l2 = it.residual_l2;
  r.newton_iters = newton;
  r.linear_iters = linear;
  r.min_hessian_eig = it.min_eig;
  r.regularized = regularized;
  r.max_compatibility_defect = max_defect;

  double shift = 0.0;
  if (problem.normalization == Normalization::MeanZero) {
    shift = grid_mean(r.phi.values);
  } else {
    shift = spectral::interpolate_at(r.phi.grid, r.phi.values, problem.anchor);
  }
  for (double& v : r.phi.values) v -= shift;
  return r;
}

}  // namespace

void MAProblem::validate() const {
  const int n = f.grid.dim();
  if (S.dim() != n) throw Error(ErrorCode::InvalidArgument, "reference matrix dimension differs from grid");
  if (n < 2) throw Error(ErrorCode::UnsupportedDimension, "Monge-Ampere needs n >= 2");
  const double fmin = *std::min_element(f.values.begin(), f.values.end());
  if (!(fmin > 0.0)) throw Error(ErrorCode::NegativeF, "min f = " + std::to_string(fmin) + " is not positive");
  if (!(spectrum(S).min() > 0.0)) throw Error(ErrorCode::InvalidArgument, "reference matrix S is not positive definite");
  const double integral = f.integral();
  if (std::abs(determinant(S) - integral) > 1e-10 * integral) {
    throw Error(ErrorCode::InvalidArgument, "solvability constraint violated: det S - int f = " +
                                                sci(determinant(S) - integral) + " (int f = " + sci(integral) + ")");
  }
  if (normalization == Normalization::VanishAt && static_cast<int>(anchor.size()) != n) {
    throw Error(ErrorCode::InvalidArgument, "anchor point must have n coordinates");
  }
}

ReferenceMatrix select_reference_isotropic(const ScalarField& f) {
  const double fmin = *std::min_element(f.values.begin(), f.values.end());
  if (!(fmin > 0.0)) throw Error(ErrorCode::NegativeF, "min f = " + std::to_string(fmin) + " is not positive");
  const int n = f.grid.dim();
  return {SymMatrix::identity(n, std::pow(f.integral(), 1.0 / n)), std::nullopt};
}

ReferenceMatrix select_reference_lam(const ScalarField& f, const MatrixField& b) {
  require_same_grid(f.grid, b.grid, "select_reference_lam");
  const double fmin = *std::min_element(f.values.begin(), f.values.end());
  if (!(fmin > 0.0)) throw Error(ErrorCode::NegativeF, "min f = " + std::to_string(fmin) + " is not positive");
  const ScalarField expected = det_power_field(b);
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    if (std::abs(f.values[k] - expected.values[k]) > 1e-8 * (1.0 + std::abs(expected.values[k]))) {
      throw Error(ErrorCode::InvalidArgument, "f differs from det(B)^{1/(n-1)} at node " + std::to_string(k));
    }
  }
  const int n = f.grid.dim();
  const SymMatrix mean = mean_matrix(b);
  const double det_mean = determinant(mean);
  if (!(spectrum(mean).min() > 0.0) || !(det_mean > 0.0)) {
    throw Error(ErrorCode::DegenerateMean, "mean of B is not positive definite");
  }
  const double lambda = std::pow(f.integral(), 1.0 / n) / std::pow(det_mean, static_cast<double>(n - 1) / n);
  return {lambda * cofactor(mean), lambda};
}

MatrixField shifted_hessian(const ScalarField& phi, const SymMatrix& S) {
  const TorusGrid& grid = phi.grid;
  const int n = grid.dim();
  const auto h = spectral::hessian(grid, phi.values);
  MatrixField out(grid, S, false);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::size_t c = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b, ++c) out.values[k].set(a, b, S(a, b) + h[c][k]);
  }
  return out;
}

MAResult solve_periodic_ma(const MAProblem& problem, const MASolverOptions& options) {
  problem.validate();
  const TorusGrid& grid = problem.f.grid;
  const int n = grid.dim();
  const double tol = options.tolerance > 0.0 ? options.tolerance : (n == 2 ? 1e-9 : 1e-7);

  ScalarField f = problem.f;
  if (problem.regularize) f = mollify(f, 4.0 / grid.points_per_axis());
  const double fmax = f.max_abs();
  const double det_s = determinant(problem.S);
  const SymMatrix precond_coeff = cofactor(problem.S);

  Iterate cur = evaluate(ScalarField(grid), problem.S, f.values, fmax, det_s);
  double max_defect = cur.compatibility_defect;
  int newton = 0;
  int linear = 0;

  while (cur.residual_inf > tol) {
    if (newton >= options.max_newton) {
      throw MASolveError(ErrorCode::NewtonStall,
                         "no convergence after " + std::to_string(newton) + " Newton steps (residual " +
                             sci(cur.residual_inf) + ")",
                         to_result(cur, problem, problem.regularize, newton, linear, max_defect));
    }

    // Linearized operator tr(cof(Hess phi + S) Hess delta), projected to mean zero.
    std::vector<std::vector<double>> coeff;
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        coeff.emplace_back(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
          coeff.back()[k] = cofactor(cur.hess[k])(a, b) * (a == b ? 1.0 : 2.0);
        }
      }
    }
    LinearMap op = [&](const Vec& x, Vec& y) {
      const auto h = spectral::hessian(grid, x);
      y.assign(grid.size(), 0.0);
      for (std::size_t c = 0; c < h.size(); ++c)
        for (std::size_t k = 0; k < grid.size(); ++k) y[k] += coeff[c][k] * h[c][k];
      remove_mean(y);
    };
    LinearMap prec = [&](const Vec& x, Vec& y) { y = spectral::solve_constant_coefficient(grid, x, precond_coeff); };

    Vec rhs = cur.residual;
    remove_mean(rhs);
    Vec delta;
    const GmresOutcome lin = gmres(op, prec, rhs, delta, options.gmres_restart, options.gmres_max_iterations,
                                   options.gmres_relative_tolerance);
    linear += lin.iterations;
    ++newton;

    double t = 1.0;
    bool accepted = false;
    bool positivity_failed = false;
    for (int halving = 0; halving <= options.max_halvings; ++halving, t *= 0.5) {
      ScalarField trial(grid);
      for (std::size_t k = 0; k < grid.size(); ++k) trial.values[k] = cur.phi.values[k] + t * delta[k];
      Iterate next = evaluate(trial, problem.S, f.values, fmax, det_s);
      if (!(next.min_eig > 0.0)) {
        positivity_failed = true;
        continue;
      }
      if (next.residual_inf < cur.residual_inf) {
        max_defect = std::max(max_defect, next.compatibility_defect);
        cur = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      const ErrorCode code = positivity_failed ? ErrorCode::PositivityLoss : ErrorCode::NewtonStall;
      throw MASolveError(code,
                         positivity_failed ? "no damping keeps Hess phi + S positive definite"
                                           : "residual plateau at " + sci(cur.residual_inf),
                         to_result(cur, problem, problem.regularize, newton, linear, max_defect));
    }
  }
  return to_result(cur, problem, problem.regularize, newton, linear, max_defect);
}

MADiagnostics ma_diagnostics(const MAResult& result, const MatrixField& b) {
  require_same_grid(result.phi.grid, b.grid, "ma_diagnostics");
  const TorusGrid& grid = b.grid;
  const int n = grid.dim();
  const ScalarField f = det_power_field(b);
  const MatrixField hpsi = shifted_hessian(result.phi, result.S);
  const auto grad = spectral::gradient(grid, result.phi.values);
  const DivergenceReport div = divergence(b);

  MADiagnostics d;
  d.max_f = f.max_abs();
  d.amgm_min_slack = std::numeric_limits<double>::infinity();
  Vec trace_terms(grid.size()), pairing_terms(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const SymMatrix& bk = b.values[k];
    d.amgm_min_slack = std::min(d.amgm_min_slack, trace_product(hpsi.values[k], bk) / n - f.values[k]);
    trace_terms[k] = trace_product(hpsi.values[k] - result.S, bk);
    double pair = 0.0, g2 = 0.0;
    for (int i = 0; i < n; ++i) {
      pair += div.abs_part.at(k, i) * grad[i][k];
      g2 += grad[i][k] * grad[i][k];
    }
    pairing_terms[k] = pair;
    d.grad_inf = std::max(d.grad_inf, std::sqrt(g2));
  }
  d.trace_integral = grid_mean(trace_terms);
  d.div_pairing = grid_mean(pairing_terms);
  d.ibp_defect = std::abs(d.trace_integral + d.div_pairing);
  d.grad_ratio = d.grad_inf / result.S.operator_norm();
  return d;
}

}  // namespace detlab
