#pragma once

// Experiment harness: Jensen-type gap under the divergence constraint,
// semicontinuity probes along sequences, the blow-up inequality terms and
// homogeneous Young-measure moments.

#include <string>
#include <vector>

#include "detlab/fields.hpp"
#include "detlab/generators.hpp"
#include "detlab/monge_ampere.hpp"

namespace detlab {

struct Assertion {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // ">=" or "<="
  bool passed = false;
};

Assertion assert_at_least(std::string name, double value, double threshold);
Assertion assert_at_most(std::string name, double value, double threshold);
bool all_passed(const std::vector<Assertion>& list);

struct QuasiconcavityResult {
  double gap = 0.0;             // det(mean A)^{1/(n-1)} - D(A)
  double D = 0.0;
  double det_mean_power = 0.0;
  double tv_estimate = 0.0;     // recorded so violations on non-div-free input are attributable
  double linf_norm = 0.0;
  double tolerance = 0.0;       // 1e-8 (1 + |A|_inf^n)
};

QuasiconcavityResult check_quasiconcavity(const MatrixField& a);

struct ProbeRow {
  int k = 0;
  double D = 0.0;               // analytic for the counterexample, else quadrature
  double D_sampled = 0.0;       // grid quadrature
  double lp_critical = 0.0;     // p = n/(n-1)
  double lp_chosen = 0.0;
  double div_tv = 0.0;
  bool div_tv_exact = false;
};

struct ProbeReport {
  Family family = Family::Constant;
  int n = 2;
  double p = 0.0;
  std::vector<ProbeRow> rows;
  double D_limit = 0.0;
  /// det(mean)^{1/(n-1)} when the limit is constant, otherwise NaN.
  double D_limit_mean_route = 0.0;
  SymMatrix limit_mean;
  double gap = 0.0;             // max_k D_Ak - D_limit over the recorded rows
  std::vector<Assertion> assertions;
};

ProbeReport usc_probe(const SequenceSpec& spec, double p);

struct ProofTermsOptions {
  int m = 64;
  Interpolation interpolation = Interpolation::Trigonometric;
  /// Uniform ellipticity floor; <= 0 takes the smallest eigenvalue found.
  double epsilon = 0.0;
  MASolverOptions solver;
};

struct ProofTermsReport {
  int n = 2;
  int k = 0;
  double R = 0.0;
  double I = 0.0, II = 0.0, III = 0.0, III1 = 0.0, III2 = 0.0, III3 = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  double slack = 0.0;
  double epsilon = 0.0;
  double cutoff_power_integral = 0.0;   // int phi^{n/(n-1)}
  double S_norm = 0.0;
  double phi_c0 = 0.0;
  double residual_inf = 0.0;
  int newton_iters = 0;
  double decomposition_defect = 0.0;    // |III - (III1 - III2 - III3)|
  std::vector<Assertion> assertions;

  /// II^{1/n} - III/(n gamma) - I^{(n-1)/n} from the stored fields.
  double slack_formula() const;
};

ProofTermsReport proof_terms(const MatrixField& ak, const SymMatrix& aconst, const Point& a, double r, double margin,
                             const ProofTermsOptions& options = {}, int k_label = 0);

/// Ak = B0(k x) for every (k, R) pair, rows ordered by k then R. B0 is read
/// directly at k (a + R x), so large k costs no more than k = 1.
std::vector<ProofTermsReport> proof_terms_sweep(const MatrixField& b0, const SymMatrix& aconst, const Point& a,
                                                const std::vector<int>& ks, const std::vector<double>& rs,
                                                double margin, const ProofTermsOptions& options = {});

/// Least-squares slope of log|y| against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct YoungEstimate {
  Point x;
  std::vector<SymMatrix> support;
  std::vector<double> weights;
  std::vector<double> moments;          // <nu, M_i^{1/(n-1)}>, i = 0..n, when requested
  double det_moment = 0.0;
  double det_mean_power = 0.0;          // det(mean B)^{1/(n-1)}
  double div_tv = 0.0;
  bool divergence_free = false;
  std::vector<Assertion> assertions;
};

/// Homogeneous Young measure of B(k x): the node values of B with uniform
/// weights (exact duplicates merged).
YoungEstimate young_measure_estimate(const MatrixField& b, bool test_moments, const Point& x = {},
                                     double div_free_tolerance = 1e-6);

}  // namespace detlab
