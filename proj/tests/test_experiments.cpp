#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "detlab/error.hpp"
#include "detlab/experiments.hpp"
#include "support.hpp"

using namespace detlab;
using namespace detlab::testing;

namespace {
constexpr double kTau = 2.0 * std::numbers::pi;

MatrixField separable(const TorusGrid& g, double a1, double b1) {
  return separable_diagonal_field(
      g, [=](double t) { return 1.5 + a1 * std::sin(kTau * t); }, [=](double t) { return 2.0 + b1 * std::cos(kTau * 2 * t); });
}

/// Smooth, uniformly elliptic, not divergence-free.
MatrixField skewed_field(const TorusGrid& g) {
  MatrixField b(g, SymMatrix::identity(2));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.node(i);
    const double s = std::sin(kTau * x[0]), c = std::cos(kTau * x[1]);
    b.values[i] = SymMatrix::from_rows({{2.0 + 0.8 * s, 0.3 * c}, {0.3 * c, 1.5 + 0.5 * c}});
  }
  return b;
}
/// (2 + sin 2 pi x1) Id: det(mean) < mean det.
MatrixField pulsing_identity(const TorusGrid& g) {
  MatrixField d(g, SymMatrix::identity(2));
  for (std::size_t i = 0; i < g.size(); ++i) d.values[i] *= 2.0 + std::sin(kTau * g.node(i)[0]);
  return d;
}
}  // namespace

TEST_CASE("assertion helpers") {
  CHECK(assert_at_least("x", 1.0, 1.0).passed);
  CHECK_FALSE(assert_at_least("x", 0.5, 1.0).passed);
  CHECK(assert_at_most("x", 1.0, 1.0).passed);
  CHECK_FALSE(all_passed({assert_at_most("a", 0, 1), assert_at_most("b", 2, 1)}));
}

TEST_CASE("quasiconcavity gap") {
  const TorusGrid g(2, 32);
  const QuasiconcavityResult c = check_quasiconcavity(MatrixField(g, SymMatrix::from_rows({{2, 0.5}, {0.5, 1}})));
  CHECK(std::abs(c.gap) <= 1e-14);
  CHECK(c.D == doctest::Approx(1.75));

  const QuasiconcavityResult s = check_quasiconcavity(separable(g, 0.9, 1.5));
  CHECK(std::abs(s.gap) <= 1e-10);
  CHECK(s.tv_estimate <= 1e-10);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RandomPotential p = random_potential(2, seed, 0.01);
    const QuasiconcavityResult r = check_quasiconcavity(cofactor_hessian_field(2, p.amplitude, p.modes, TorusGrid(2, 64)));
    CHECK(r.gap >= -r.tolerance);
    CHECK(r.tv_estimate <= 1e-6);
  }

  // Without the constraint the gap can be negative: det is not concave.
  const QuasiconcavityResult v = check_quasiconcavity(pulsing_identity(g));
  CHECK(v.tv_estimate > 1.0);
  CHECK(v.gap < 0.0);
}

TEST_CASE("semicontinuity probe: counterexample") {
  SequenceSpec spec;
  spec.family = Family::Counterexample;
  spec.m = 512;
  spec.center = {0.5, 0.5};
  spec.k_range = {1, 2, 3, 4, 5};
  const ProbeReport r = usc_probe(spec, 1.0);
  CHECK(all_passed(r.assertions));
  CHECK(r.D_limit == 0.0);
  CHECK(r.gap == doctest::Approx(std::numbers::pi));
  for (std::size_t i = 0; i + 1 < r.rows.size(); ++i) {
    CHECK(r.rows[i + 1].lp_chosen / r.rows[i].lp_chosen == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.rows[i].lp_critical == doctest::Approx(r.rows[i + 1].lp_critical));
  }
}

TEST_CASE("semicontinuity probe: oscillation, mollified, constant") {
  const TorusGrid g(2, 16);
  const MatrixField b = cofactor_hessian_field(2, 0.004, {{1, 1}, {1, -2}}, g);

  SequenceSpec osc;
  osc.family = Family::Oscillation;
  osc.m = 16;
  osc.base = b;
  osc.k_range = {1, 2, 4};
  const ProbeReport ro = usc_probe(osc, 2.0);
  CHECK(all_passed(ro.assertions));
  CHECK(std::abs(ro.gap) <= 1e-10);  // D(B(kx)) = D(B) = det(mean B) for cofactor-Hessian B
  for (const ProbeRow& row : ro.rows) CHECK(row.div_tv <= 1e-6 * row.k);

  SequenceSpec mol;
  mol.family = Family::Mollified;
  mol.m = 16;
  mol.base = b;
  mol.k_range = {1, 2};
  mol.mollify_eps = {0.25, 0.125};
  const ProbeReport rm = usc_probe(mol, 2.0);
  CHECK(rm.rows.size() == 2);
  CHECK(std::isnan(rm.D_limit_mean_route));

  SequenceSpec con;
  con.family = Family::Constant;
  con.m = 16;
  con.base = MatrixField(g, SymMatrix::identity(2, 3.0));
  con.k_range = {1, 2};
  const ProbeReport rc = usc_probe(con, 2.0);
  CHECK(all_passed(rc.assertions));
  CHECK(std::abs(rc.gap) <= 1e-14);
  CHECK(rc.D_limit == doctest::Approx(9.0));
}

TEST_CASE("proof terms with constant coefficients") {
  const TorusGrid g(2, 32);
  const MatrixField id(g, SymMatrix::identity(2));
  const ProofTermsReport r = proof_terms(id, SymMatrix::identity(2), {0.5, 0.5}, 0.25, 0.1);
  CHECK(all_passed(r.assertions));
  CHECK(r.phi_c0 <= 1e-12);
  CHECK(std::abs(r.III) <= 1e-12);
  CHECK(r.II == doctest::Approx(1.0));
  CHECK(r.lambda == doctest::Approx(1.0));
  CHECK(r.gamma == doctest::Approx(1.0));
  CHECK(r.I == doctest::Approx(r.cutoff_power_integral));
  CHECK(r.slack == doctest::Approx(r.slack_formula()));
  CHECK(r.slack >= 0.0);
}

TEST_CASE("proof terms reject degenerate input") {
  const TorusGrid g(2, 16);
  MatrixField b(g, SymMatrix::identity(2));
  b.values[4] = SymMatrix::from_rows({{1e-3, 0}, {0, 1}});
  try {
    proof_terms(b, SymMatrix::identity(2), {0.5, 0.5}, 0.25, 0.1, ProofTermsOptions{32, Interpolation::Trigonometric, 0.5, {}});
    FAIL("expected NotUniformlyElliptic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotUniformlyElliptic);
  }
  CHECK_THROWS_AS(proof_terms(MatrixField(g, SymMatrix::identity(2)), SymMatrix::identity(2), {1.0, 0.5}, 0.25, 0.1), Error);
}

TEST_CASE("proof terms on a divergence-free oscillation") {
  const TorusGrid g(2, 32);
  const RandomPotential p = random_potential(2, 3, 0.01);
  const MatrixField b0 = epsilon_shift(cofactor_hessian_field(2, p.amplitude, p.modes, g), 0.5);
  ProofTermsOptions opts;
  opts.m = 64;
  opts.epsilon = 0.5;
  const auto rows = proof_terms_sweep(b0, mean_matrix(b0), {0.37, 0.61}, {1, 2}, {0.5, 0.25}, 0.1, opts);
  REQUIRE(rows.size() == 4);
  for (const ProofTermsReport& r : rows) {
    CHECK(all_passed(r.assertions));
    CHECK(r.gamma >= std::pow(0.5, 1.0) - 1e-8);
    // Spectral discretization defect; tiny when k R is an integer (periodic window).
    const double scale = std::abs(r.III1) + std::abs(r.III2) + std::abs(r.III3);
    CHECK(r.decomposition_defect <= 1e-2 * scale);
    if (std::abs(r.k * r.R - std::round(r.k * r.R)) < 1e-12) CHECK(r.decomposition_defect <= 1e-6 * (1.0 + scale));
    CHECK(std::isfinite(r.S_norm));
    CHECK(std::isfinite(r.phi_c0));
  }
  CHECK(rows[0].k == 1);
  CHECK(rows[3].k == 2);
  CHECK(rows[3].R == 0.25);
}

TEST_CASE("blow-up term III1 scales linearly in R") {
  // Ak = B0(4x) with several periods in each window, R in {1/2, 1/4, 1/8}.
  // At k = 1 the leading term cancels against the symmetric cutoff and the
  // slope is close to 2; III2 has no stable slope (its integral factor changes
  // sign with the window) and is only reported.
  const MatrixField b0 = skewed_field(TorusGrid(2, 64));
  const std::vector<double> rs{0.5, 0.25, 0.125};
  for (const Point& a : {Point{0.3, 0.55}, Point{0.37, 0.61}, Point{0.5, 0.5}, Point{0.2, 0.7}}) {
    std::vector<double> y1, y2;
    for (const ProofTermsReport& rep : proof_terms_sweep(b0, mean_matrix(b0), a, {4}, rs, 0.1)) {
      y1.push_back(rep.III1);
      y2.push_back(rep.III2);
    }
    const double s1 = loglog_slope(rs, y1);
    MESSAGE("a = (" << a[0] << ", " << a[1] << "): III1 slope " << s1 << ", III2 slope " << loglog_slope(rs, y2));
    CHECK(std::abs(s1 - 1.0) <= 0.3);
  }
}

TEST_CASE("log-log slope") {
  CHECK(loglog_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
  CHECK(loglog_slope({1, 2}, {-1, -2}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(loglog_slope({1}, {1}), Error);
}

TEST_CASE("Young measure of a constant field is a Dirac mass") {
  const SymMatrix m = SymMatrix::from_rows({{2, 0.3}, {0.3, 1}});
  const YoungEstimate y = young_measure_estimate(MatrixField(TorusGrid(2, 16), m), true);
  REQUIRE(y.support.size() == 1);
  CHECK(y.support[0] == m);
  CHECK(y.weights[0] == 1.0);
  CHECK(y.det_moment == doctest::Approx(y.det_mean_power).epsilon(1e-15));
  CHECK(y.moments[0] == 1.0);
  CHECK(y.moments[1] == doctest::Approx(3.0));
  CHECK(y.moments[2] == doctest::Approx(determinant(m)));
  CHECK(all_passed(y.assertions));
}

TEST_CASE("Young measure inequality") {
  const YoungEstimate s = young_measure_estimate(separable(TorusGrid(2, 32), 0.7, 1.2), true);
  CHECK(s.divergence_free);
  CHECK(std::abs(s.det_moment - s.det_mean_power) <= 1e-10);
  CHECK(all_passed(s.assertions));

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RandomPotential p = random_potential(2, seed, 0.01);
    const YoungEstimate y = young_measure_estimate(cofactor_hessian_field(2, p.amplitude, p.modes, TorusGrid(2, 32)), false);
    CHECK(y.divergence_free);
    CHECK(all_passed(y.assertions));
    double w = 0.0;
    for (double v : y.weights) w += v;
    CHECK(w == doctest::Approx(1.0));
  }

  const YoungEstimate v = young_measure_estimate(skewed_field(TorusGrid(2, 16)), false);
  CHECK_FALSE(v.divergence_free);
  CHECK(v.assertions.size() == 1);
}
