// One PASS/FAIL line per acceptance criterion; exit status is the failure count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "detlab/experiments.hpp"
#include "detlab/generators.hpp"
#include "detlab/monge_ampere.hpp"
#include "properties.hpp"

using namespace detlab;

namespace {
MAProblem pose(ScalarField f, SymMatrix S) {
  MAProblem p;
  p.f = std::move(f);
  p.S = std::move(S);
  return p;
}


constexpr double kPi = std::numbers::pi;
constexpr double kTau = 2.0 * std::numbers::pi;

struct Outcome {
  bool ok = true;
  std::ostringstream detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double phi_error(const ScalarField& phi, const ScalarField& exact) {
  const double shift = grid_mean(phi.values) - grid_mean(exact.values);
  double e = 0.0;
  for (std::size_t i = 0; i < phi.values.size(); ++i) e = std::max(e, std::abs(phi.values[i] - shift - exact.values[i]));
  return e;
}

MatrixField separable(const TorusGrid& g, int variant) {
  const double a1 = 0.2 + 0.15 * variant, b1 = 1.3 - 0.2 * variant;
  const int fa = 1 + variant % 3, fb = 1 + variant % 2;
  return separable_diagonal_field(
      g, [=](double t) { return 1.5 + a1 * std::sin(kTau * fa * t); },
      [=](double t) { return 2.0 + b1 * std::cos(kTau * fb * t + 0.3); });
}

void counterexample_reproduction(Outcome& o) {
  const TorusGrid g(2, 512);
  double worst_sampled = 0.0, worst_l1 = 0.0;
  double prev_l1 = 0.0;
  for (int k = 1; k <= 5; ++k) {
    const CounterexampleSample s = counterexample_field(2, {0.5, 0.5}, k, g);
    o.require(s.analytic.exact_D() == kPi, "analytic D = pi at k=" + std::to_string(k));
    o.require(std::abs(s.analytic.exact_div_tv() - 2 * kPi) <= 1e-15, "div TV = 2 pi at k=" + std::to_string(k));
    worst_sampled = std::max(worst_sampled, std::abs(functional_D(s.field) - kPi) / kPi);
    const double l1 = s.analytic.exact_lp(1.0);
    if (k > 1) worst_l1 = std::max(worst_l1, std::abs(l1 / prev_l1 - 0.5) / 0.5);
    prev_l1 = l1;
  }
  o.require(worst_sampled <= 0.02, "sampled D within 2%");
  o.require(worst_l1 <= 0.01, "L1 ratio 2^{-1} per unit k within 1%");
  o.detail << "sampled D rel. err " << worst_sampled << ", L1 ratio rel. err " << worst_l1;
}

void quasiconcavity(Outcome& o) {
  double worst = kInfinity;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const RandomPotential p = random_potential(2, seed, 0.01);
    const QuasiconcavityResult r = check_quasiconcavity(cofactor_hessian_field(2, p.amplitude, p.modes, TorusGrid(2, 64)));
    worst = std::min(worst, r.gap);
  }
  double sep = 0.0;
  for (int v = 0; v < 5; ++v) sep = std::max(sep, std::abs(check_quasiconcavity(separable(TorusGrid(2, 64), v)).gap));
  o.require(worst >= -1e-8, "cofactor-Hessian gap >= -1e-8");
  o.require(sep <= 1e-10, "separable gap = 0 to 1e-10");
  o.detail << "min gap " << worst << ", max |separable gap| " << sep;
}

void monge_ampere(Outcome& o) {
  const ManufacturedProblem mp = manufactured_sine_problem(TorusGrid(2, 64), 0.01);
  const MAResult r = solve_periodic_ma(pose(mp.f, mp.S));
  const double err = phi_error(r.phi, mp.phi_exact);
  o.require(err <= 1e-6, "error <= 1e-6");
  o.require(r.residual_inf <= 1e-9, "residual <= 1e-9");
  o.require(r.newton_iters <= 10, "<= 10 Newton steps");

  // Both sine-problem errors sit at roundoff, so the order is measured on
  // analytic data that is not bandlimited.
  const ManufacturedProblem sine32 = manufactured_sine_problem(TorusGrid(2, 32), 0.01);
  const double sine_err32 = phi_error(solve_periodic_ma(pose(sine32.f, sine32.S)).phi, sine32.phi_exact);
  double rat[2];
  int i = 0;
  for (int m : {32, 64}) {
    const ManufacturedProblem rp = manufactured_rational_problem(TorusGrid(2, m), 1e-4);
    rat[i++] = phi_error(solve_periodic_ma(pose(rp.f, rp.S)).phi, rp.phi_exact);
  }
  o.require(rat[0] / rat[1] >= 16.0, "error ratio m=32 -> 64 >= 16");
  o.detail << "err " << err << ", residual " << r.residual_inf << ", " << r.newton_iters << " Newton steps; sine err m=32 "
           << sine_err32 << "; rational err " << rat[0] << " -> " << rat[1] << " (ratio " << rat[0] / rat[1] << ")";
}

void proof_inequality(Outcome& o) {
  ProofTermsOptions opts;
  opts.m = 64;
  opts.epsilon = 0.5;
  const int ks[] = {1, 2, 4, 1, 2, 4, 1, 2, 4, 2};
  const double rs[] = {0.5, 0.25, 0.125, 0.25, 0.5, 0.25, 0.125, 0.125, 0.5, 0.25};
  const double margins[] = {0.1, 0.1, 0.15, 0.2, 0.1, 0.15, 0.1, 0.2, 0.1, 0.15};
  double worst_slack = kInfinity, worst_gamma = kInfinity;
  for (int c = 0; c < 10; ++c) {
    const RandomPotential p = random_potential(2, 100 + c, 0.01);
    const MatrixField b0 = epsilon_shift(cofactor_hessian_field(2, p.amplitude, p.modes, TorusGrid(2, 32)), 0.5);
    const Point a{0.2 + 0.06 * c, 0.7 - 0.04 * c};
    const ProofTermsReport r = proof_terms_sweep(b0, mean_matrix(b0), a, {ks[c]}, {rs[c]}, margins[c], opts).front();
    worst_slack = std::min(worst_slack, r.slack + 1e-6 * (1.0 + r.II));
    worst_gamma = std::min(worst_gamma, r.gamma - (std::pow(0.5, 1.0) - 1e-8));
    o.require(std::isfinite(r.S_norm) && std::isfinite(r.lambda) && std::isfinite(r.phi_c0),
              "finite S, lambda, phi in config " + std::to_string(c));
  }
  o.require(worst_slack >= 0.0, "slack >= -1e-6 (1 + II)");
  o.require(worst_gamma >= 0.0, "gamma >= eps - 1e-8");
  o.detail << "min slack margin " << worst_slack << ", min gamma margin " << worst_gamma;
}

void semicontinuity(Outcome& o) {
  double worst_osc = -kInfinity;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RandomPotential p = random_potential(2, seed, 0.01);
    SequenceSpec s;
    s.family = Family::Oscillation;
    s.m = 16;
    s.base = cofactor_hessian_field(2, p.amplitude, p.modes, TorusGrid(2, 16));
    s.k_range = {1, 2, 4, 8};
    worst_osc = std::max(worst_osc, usc_probe(s, kInfinity).gap);
  }
  SequenceSpec ce;
  ce.family = Family::Counterexample;
  ce.m = 512;
  ce.center = {0.5, 0.5};
  ce.k_range = {1, 2, 3, 4, 5};
  const ProbeReport r = usc_probe(ce, 2.0);
  o.require(worst_osc <= 1e-8, "oscillation gap <= 1e-8");
  o.require(std::abs(r.gap - kPi) <= 1e-12 && r.gap > 0.0, "counterexample gap = pi");
  o.require(all_passed(r.assertions), "counterexample probe assertions");
  o.detail << "max oscillation gap " << worst_osc << ", counterexample gap " << r.gap;
}

void young_inequality(Outcome& o) {
  double worst = -kInfinity;
  int divfree = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const RandomPotential p = random_potential(2, 200 + seed, 0.01);
    const YoungEstimate y = young_measure_estimate(cofactor_hessian_field(2, p.amplitude, p.modes, TorusGrid(2, 32)), false);
    divfree += y.divergence_free;
    worst = std::max(worst, y.det_moment - y.det_mean_power);
  }
  const YoungEstimate dirac = young_measure_estimate(MatrixField(TorusGrid(2, 16), SymMatrix::from_rows({{2, 0.3}, {0.3, 1}})), false);
  double eq = std::abs(dirac.det_moment - dirac.det_mean_power);
  for (int v = 0; v < 5; ++v) {
    const YoungEstimate s = young_measure_estimate(separable(TorusGrid(2, 32), v), false);
    eq = std::max(eq, std::abs(s.det_moment - s.det_mean_power));
  }
  o.require(divfree == 20, "all 20 fields divergence-free");
  o.require(worst <= 1e-8, "det moment <= det(mean) + 1e-8");
  o.require(eq <= 1e-10, "equality cases to 1e-10");
  o.detail << "max excess " << worst << ", equality defect " << eq;
}

void property_suites(Outcome& o) {
  for (const testing::PropertyResult& r : testing::all_properties()) {
    o.require(r.passed(), r.name);
    o.detail << r.name << ": " << r.worst_ratio << "; ";
  }
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"C1 counterexample reproduction", counterexample_reproduction},
      {"C2 quasiconcavity gap", quasiconcavity},
      {"C3 Monge-Ampere solver", monge_ampere},
      {"C4 blow-up inequality", proof_inequality},
      {"C5 semicontinuity dichotomy", semicontinuity},
      {"C6 Young-measure inequality", young_inequality},
      {"C7 property suites", property_suites},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s (%.1fs): %s\n", o.ok ? "PASS" : "FAIL", name, s, o.detail.str().c_str());
    failures += !o.ok;
  }
  return failures;
}
