#include "detlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "detlab/error.hpp"
#include "detlab/spectral.hpp"

namespace detlab {

namespace {

double det_power_of(const SymMatrix& m) {
  const int n = m.dim();
  const double det = std::max(determinant(m), 0.0);
  return n == 2 ? det : std::pow(det, 1.0 / (n - 1));
}

double min_eigenvalue(const MatrixField& a) {
  double lo = std::numeric_limits<double>::infinity();
  for (const SymMatrix& v : a.values) lo = std::min(lo, spectrum(v).min());
  return lo;
}

bool is_constant(const MatrixField& a) {
  return std::all_of(a.values.begin(), a.values.end(), [&](const SymMatrix& v) { return v == a.values.front(); });
}

}  // namespace

Assertion assert_at_least(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, ">=", value >= threshold};
}

Assertion assert_at_most(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, "<=", value <= threshold};
}

bool all_passed(const std::vector<Assertion>& list) {
  return std::all_of(list.begin(), list.end(), [](const Assertion& a) { return a.passed; });
}

QuasiconcavityResult check_quasiconcavity(const MatrixField& a) {
  require_psd(a, "check_quasiconcavity");
  QuasiconcavityResult r;
  r.D = functional_D(a);
  r.det_mean_power = det_power_of(mean_matrix(a));
  r.gap = r.det_mean_power - r.D;
  r.tv_estimate = divergence(a).tv_estimate;
  r.linf_norm = lp_norm(a, kInfinity);
  r.tolerance = 1e-8 * (1.0 + std::pow(r.linf_norm, a.grid.dim()));
  return r;
}

ProbeReport usc_probe(const SequenceSpec& spec, double p) {
  spec.validate();
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "probe exponent must be >= 1");
  const int n = spec.n;
  const double critical = static_cast<double>(n) / (n - 1);

  ProbeReport rep;
  rep.family = spec.family;
  rep.n = n;
  rep.p = p;

  std::vector<int> ks = spec.k_range;
  std::sort(ks.begin(), ks.end());
  for (int k : ks) {
    ProbeRow row;
    row.k = k;
    const MatrixField ak = spec.member(k);
    row.D_sampled = functional_D(ak);
    if (spec.family == Family::Counterexample) {
      const AnalyticCounterexample an{n, spec.center, k};
      row.D = an.exact_D();
      row.lp_critical = an.exact_lp(critical);
      row.lp_chosen = an.exact_lp(p);
      row.div_tv = an.exact_div_tv();
      row.div_tv_exact = true;
    } else {
      row.D = row.D_sampled;
      row.lp_critical = lp_norm(ak, critical);
      row.lp_chosen = lp_norm(ak, p);
      row.div_tv = divergence(ak).tv_estimate;
    }
    rep.rows.push_back(row);
  }

  // Weak limit of the family.
  MatrixField limit;
  bool constant_limit = false;
  switch (spec.family) {
    case Family::Counterexample:
      limit = MatrixField(TorusGrid(n, spec.m), SymMatrix(n), true);
      constant_limit = true;
      break;
    case Family::Oscillation:
      limit = MatrixField(spec.base->grid, mean_matrix(*spec.base), true);
      constant_limit = true;
      break;
    case Family::Mollified:
    case Family::Constant:
      limit = *spec.base;
      constant_limit = is_constant(limit);
      break;
  }
  rep.limit_mean = mean_matrix(limit);
  rep.D_limit = functional_D(limit);
  rep.D_limit_mean_route = constant_limit ? det_power_of(rep.limit_mean) : std::numeric_limits<double>::quiet_NaN();

  double sup = -std::numeric_limits<double>::infinity();
  for (const ProbeRow& row : rep.rows) sup = std::max(sup, row.D);
  rep.gap = sup - rep.D_limit;

  if (constant_limit) {
    rep.assertions.push_back(
        assert_at_most("limit functional agrees with det(mean)^{1/(n-1)}", std::abs(rep.D_limit - rep.D_limit_mean_route), 1e-10));
  }
  if (spec.family == Family::Counterexample) {
    for (const ProbeRow& row : rep.rows) {
      rep.assertions.push_back(assert_at_most("sampled D within 2% of omega_n at k=" + std::to_string(row.k),
                                              std::abs(row.D_sampled - row.D) / row.D, 0.02));
    }
  }
  return rep;
}

double ProofTermsReport::slack_formula() const {
  return std::pow(II, 1.0 / n) - III / (n * gamma) - std::pow(I, static_cast<double>(n - 1) / n);
}

namespace {

// The blow-up samples A(a + R x) are read from `src` at sample_a + sample_r x;
// for Ak = B0(k .) that is B0 at (k a mod 1) + k R x, and div Ak = k div B0
// there, so the R factor of III1, III2 becomes k R. `a` and `r` keep their
// roles as anchor and reported radius.
ProofTermsReport proof_terms_impl(const MatrixField& src, const SymMatrix& aconst, const Point& a, double r,
                                  const Point& sample_a, double sample_r, double margin,
                                  const ProofTermsOptions& options, int k_label) {
  const MatrixField& ak = src;
  const int n = ak.grid.dim();
  if (n < 2) throw Error(ErrorCode::UnsupportedDimension, "proof terms need n >= 2");
  if (aconst.dim() != n || static_cast<int>(a.size()) != n) {
    throw Error(ErrorCode::InvalidArgument, "A(a) and a must have dimension n");
  }
  for (double c : a) {
    if (!(c > 0.0 && c < 1.0)) throw Error(ErrorCode::InvalidArgument, "blow-up point must lie in (0,1)^n");
  }

  const double min_ak = min_eigenvalue(ak);
  const double min_const = spectrum(aconst).min();
  double eps = options.epsilon;
  if (eps <= 0.0) eps = std::min(min_ak, min_const);
  if (!(eps > 0.0) || min_ak < eps || min_const < eps) {
    throw Error(ErrorCode::NotUniformlyElliptic, "minimum eigenvalue " + std::to_string(std::min(min_ak, min_const)) +
                                                     " below epsilon " + std::to_string(eps));
  }

  const TorusGrid grid(n, options.m);
  const double q = static_cast<double>(n) / (n - 1);
  const ScalarField cut = bump_cutoff(grid, margin);
  const MatrixField b = localized_field(ak, aconst, sample_a, sample_r, cut, options.interpolation);
  const MatrixField sampled = sample_blowup(ak, sample_a, sample_r, grid, options.interpolation);
  const ScalarField f = det_power_field(b);

  ProofTermsReport rep;
  rep.n = n;
  rep.k = k_label;
  rep.R = r;
  rep.epsilon = eps;

  const ReferenceMatrix ref = select_reference_lam(f, b);
  MAProblem problem{f, ref.S, Normalization::VanishAt, a, false, ref.lambda};
  const MAResult sol = solve_periodic_ma(problem, options.solver);
  rep.lambda = ref.lambda.value_or(0.0);
  rep.S_norm = ref.S.operator_norm();
  rep.phi_c0 = sol.phi.max_abs();
  rep.residual_inf = sol.residual_inf;
  rep.newton_iters = sol.newton_iters;

  std::vector<double> i_terms(grid.size()), cut_power(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    cut_power[k] = std::pow(cut.values[k], q);
    i_terms[k] = cut_power[k] * det_power_of(sampled.values[k]);
  }
  rep.I = grid_mean(i_terms);
  rep.cutoff_power_integral = grid_mean(cut_power);
  rep.II = determinant(mean_matrix(b));
  rep.gamma = std::pow(f.integral(), 1.0 / n);

  // III = int (div B, grad phi_MA) and its three blow-up pieces.
  const VectorField div_b = divergence(b).abs_part;
  const auto grad_ma = spectral::gradient(grid, sol.phi.values);
  const auto grad_cut = spectral::gradient(grid, cut.values);
  const auto hess_cut = spectral::hessian(grid, cut.values);
  const VectorField div_ak = divergence(ak).abs_part;
  const auto targets = blowup_targets(grid, sample_a, sample_r);
  std::vector<std::vector<double>> div_ak_blowup;
  for (int i = 0; i < n; ++i) div_ak_blowup.push_back(spectral::resample_tensor(ak.grid, div_ak.component(i), targets));

  std::vector<double> t0(grid.size()), t1(grid.size()), t2(grid.size()), t3(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double p0 = 0.0, p1 = 0.0, p2 = 0.0;
    for (int i = 0; i < n; ++i) {
      p0 += div_b.at(k, i) * grad_ma[i][k];
      p1 += div_ak_blowup[i][k] * grad_ma[i][k];
      p2 += div_ak_blowup[i][k] * grad_cut[i][k];
    }
    const SymMatrix diff = sampled.values[k] - aconst;
    double p3 = 0.0;
    std::size_t c = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j, ++c) p3 += (i == j ? 1.0 : 2.0) * diff(i, j) * hess_cut[c][k];
    t0[k] = p0;
    t1[k] = cut.values[k] * p1;
    t2[k] = p2 * sol.phi.values[k];
    t3[k] = p3 * sol.phi.values[k];
  }
  rep.III = grid_mean(t0);
  rep.III1 = sample_r * grid_mean(t1);
  rep.III2 = sample_r * grid_mean(t2);
  rep.III3 = grid_mean(t3);
  rep.decomposition_defect = std::abs(rep.III - (rep.III1 - rep.III2 - rep.III3));

  rep.slack = rep.slack_formula();

  rep.assertions.push_back(assert_at_least("gamma >= eps^{1/(n-1)} - 1e-8", rep.gamma,
                                           std::pow(eps, 1.0 / (n - 1)) - 1e-8));
  rep.assertions.push_back(assert_at_least("slack >= -1e-6 (1 + II)", rep.slack, -1e-6 * (1.0 + rep.II)));
  return rep;
}

}  // namespace

ProofTermsReport proof_terms(const MatrixField& ak, const SymMatrix& aconst, const Point& a, double r, double margin,
                             const ProofTermsOptions& options, int k_label) {
  return proof_terms_impl(ak, aconst, a, r, a, r, margin, options, k_label);
}

std::vector<ProofTermsReport> proof_terms_sweep(const MatrixField& b0, const SymMatrix& aconst, const Point& a,
                                                const std::vector<int>& ks, const std::vector<double>& rs,
                                                double margin, const ProofTermsOptions& options) {
  std::vector<ProofTermsReport> rows;
  for (int k : ks) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "oscillation index must be >= 1");
    Point ka(a.size());
    for (std::size_t d = 0; d < a.size(); ++d) ka[d] = std::fmod(k * a[d], 1.0);
    for (double r : rs) rows.push_back(proof_terms_impl(b0, aconst, a, r, ka, k * r, margin, options, k));
  }
  return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidArgument, "slope needs >= 2 paired samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double cnt = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

YoungEstimate young_measure_estimate(const MatrixField& b, bool test_moments, const Point& x,
                                     double div_free_tolerance) {
  require_psd(b, "young_measure_estimate");
  const int n = b.grid.dim();
  YoungEstimate est;
  est.x = x.empty() ? Point(n, 0.5) : x;

  std::map<std::vector<double>, std::size_t> counts;
  for (const SymMatrix& v : b.values) ++counts[std::vector<double>(v.packed().begin(), v.packed().end())];
  const double total = static_cast<double>(b.values.size());
  for (const auto& [packed, count] : counts) {
    est.support.push_back(SymMatrix::from_packed(n, packed));
    est.weights.push_back(static_cast<double>(count) / total);
  }

  est.det_moment = functional_D(b);
  est.det_mean_power = det_power_of(mean_matrix(b));
  est.div_tv = divergence(b).tv_estimate;
  est.divergence_free = est.div_tv <= div_free_tolerance;

  if (test_moments) {
    est.moments.assign(static_cast<std::size_t>(n) + 1, 0.0);
    est.moments[0] = compensated_sum(est.weights);
    for (int i = 1; i < n; ++i) {
      std::vector<double> terms(est.support.size());
      for (std::size_t s = 0; s < est.support.size(); ++s) {
        const double mi = std::max(elementary_symmetric(est.support[s], i), 0.0);
        terms[s] = est.weights[s] * std::pow(mi, 1.0 / (n - 1));
      }
      est.moments[i] = compensated_sum(terms);
    }
    est.moments[n] = est.det_moment;
  }

  est.assertions.push_back(assert_at_most("weights sum to 1", std::abs(compensated_sum(est.weights) - 1.0), 1e-12));
  if (est.divergence_free) {
    est.assertions.push_back(assert_at_most("det moment <= det(mean)^{1/(n-1)} + 1e-8", est.det_moment,
                                            est.det_mean_power + 1e-8));
  }
  return est;
}

}  // namespace detlab
