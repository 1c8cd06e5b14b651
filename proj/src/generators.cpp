#include "detlab/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "detlab/error.hpp"
#include "detlab/spectral.hpp"

namespace detlab {

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double AnalyticCounterexample::density() const { return std::ldexp(1.0, k * (n - 1)); }

double AnalyticCounterexample::support_radius() const { return std::ldexp(1.0, -k); }

double AnalyticCounterexample::exact_D() const { return unit_ball_volume(n); }

double AnalyticCounterexample::exact_lp(double p) const {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "L^p exponent must be >= 1");
  if (std::isinf(p)) return density();
  // omega_n 2^{k(n-1)p} 2^{-kn}, then the 1/p root.
  const double log2_mass = k * (n - 1) * p - static_cast<double>(k) * n;
  return std::pow(unit_ball_volume(n) * std::exp2(log2_mass), 1.0 / p);
}

double AnalyticCounterexample::exact_div_tv() const {
  // |S^{n-1}| r^{n-1} = n omega_n r^{n-1}; density r^{-(n-1)} cancels the radius.
  return n * unit_ball_volume(n);
}

double AnalyticCounterexample::value_at(std::span<const double> x) const {
  return torus_distance(x, x0) <= support_radius() ? density() : 0.0;
}

CounterexampleSample counterexample_field(int n, const Point& x0, int k, const TorusGrid& grid) {
  if (grid.dim() != n || static_cast<int>(x0.size()) != n) {
    throw Error(ErrorCode::InvalidArgument, "center and grid must have dimension n");
  }
  if (k < 1) {
    throw Error(ErrorCode::InvalidArgument, "scale index k must be >= 1 so the ball fits the unit cell");
  }
  if (grid.points_per_axis() * std::ldexp(1.0, -k) < 8.0) {
    throw Error(ErrorCode::UnderResolvedBall, "m 2^-k = " + std::to_string(grid.points_per_axis() * std::ldexp(1.0, -k)) +
                                                  " < 8 nodes across the radius");
  }
  AnalyticCounterexample an{n, x0, k};
  MatrixField field(grid, SymMatrix(n), true);
  const SymMatrix inside = SymMatrix::identity(n, an.density());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (an.value_at(grid.node(i)) > 0.0) field.values[i] = inside;
  }
  return {std::move(field), std::move(an)};
}

MatrixField cofactor_hessian_field(int n, double amplitude, const std::vector<Mode>& modes, const TorusGrid& grid) {
  if (n != 2 && n != 3) throw Error(ErrorCode::UnsupportedDimension, "cofactor-Hessian fields need n in {2,3}");
  if (grid.dim() != n) throw Error(ErrorCode::GridMismatch, "grid dimension differs from n");
  if (!(amplitude >= 0.0)) throw Error(ErrorCode::InvalidArgument, "amplitude must be nonnegative");
  for (const Mode& mode : modes) {
    if (static_cast<int>(mode.size()) != n) throw Error(ErrorCode::InvalidArgument, "mode length must equal n");
  }

  const double tau = 2.0 * std::numbers::pi;
  MatrixField out(grid, SymMatrix(n), true);
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const Point x = grid.node(node);
    SymMatrix h = SymMatrix::identity(n);
    for (const Mode& mode : modes) {
      std::array<double, kMaxDim> s{}, c{}, w{};
      for (int d = 0; d < n; ++d) {
        w[d] = tau * mode[d];
        s[d] = std::sin(w[d] * x[d]);
        c[d] = std::cos(w[d] * x[d]);
      }
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          double term = 1.0;
          for (int d = 0; d < n; ++d) {
            if (a == b && d == a) {
              term *= -w[d] * w[d] * s[d];
            } else if (d == a || d == b) {
              term *= w[d] * c[d];
            } else {
              term *= s[d];
            }
          }
          h.set(a, b, h(a, b) + amplitude * term);
        }
      }
    }
    if (!is_psd(h)) {
      throw Error(ErrorCode::NotConvexPotential,
                  "Hess u has eigenvalue " + std::to_string(spectrum(h).min()) + " at node " + std::to_string(node));
    }
    out.values[node] = cofactor(h);
  }
  return out;
}

RandomPotential random_potential(int n, std::uint64_t seed, double max_amplitude, int max_modes, int max_wavenumber) {
  if (n < 1 || n > kMaxDim || max_modes < 1 || max_wavenumber < 1 || !(max_amplitude > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "random_potential: bad parameters");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count_dist(1, max_modes);
  std::uniform_int_distribution<int> wave_dist(1, max_wavenumber);
  std::bernoulli_distribution sign_dist(0.5);
  std::uniform_real_distribution<double> scale_dist(0.5, 1.0);

  RandomPotential out;
  const int count = count_dist(rng);
  double curvature = 0.0;  // sum over modes of |2 pi k|^2 bounds |Hess| per unit amplitude
  while (static_cast<int>(out.modes.size()) < count) {
    Mode mode(n);
    int norm2 = 0;
    // a zero component would make prod_d sin(2 pi k_d x_d) vanish identically
    for (int& kd : mode) {
      kd = wave_dist(rng) * (sign_dist(rng) ? -1 : 1);
      norm2 += kd * kd;
    }
    curvature += 4.0 * std::numbers::pi * std::numbers::pi * norm2;
    out.modes.push_back(std::move(mode));
  }
  out.amplitude = std::min(max_amplitude, 0.5 / curvature) * scale_dist(rng);
  return out;
}

MatrixField separable_diagonal_field(const TorusGrid& grid, const std::function<double(double)>& a,
                                     const std::function<double(double)>& b) {
  if (grid.dim() != 2) throw Error(ErrorCode::UnsupportedDimension, "separable diagonal fields are two-dimensional");
  MatrixField out(grid, SymMatrix(2), true);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point x = grid.node(i);
    const double av = a(x[1]);
    const double bv = b(x[0]);
    if (!(av >= 0.0 && bv >= 0.0)) throw Error(ErrorCode::NotPsd, "separable profile is negative at node " + std::to_string(i));
    out.values[i] = SymMatrix::diagonal({av, bv});
  }
  return out;
}

namespace {

struct Profile {
  double g, g1, g2;
};

// Id + amplitude * Hess prod_d g(x_d), from per-axis profiles.
SymMatrix product_hessian(const std::vector<Profile>& p, double amplitude) {
  const int n = static_cast<int>(p.size());
  SymMatrix h = SymMatrix::identity(n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      double term = 1.0;
      for (int d = 0; d < n; ++d) {
        if (a == b && d == a) term *= p[d].g2;
        else if (d == a || d == b) term *= p[d].g1;
        else term *= p[d].g;
      }
      h.set(a, b, h(a, b) + amplitude * term);
    }
  }
  return h;
}

template <class ProfileFn>
ManufacturedProblem manufactured_product(const TorusGrid& grid, double amplitude, double mean_product, ProfileFn profile) {
  const int n = grid.dim();
  ManufacturedProblem out{ScalarField(grid), ScalarField(grid), SymMatrix::identity(n)};
  std::vector<Profile> p(n);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point x = grid.node(i);
    double prod = 1.0;
    for (int d = 0; d < n; ++d) {
      p[d] = profile(x[d]);
      prod *= p[d].g;
    }
    const SymMatrix h = product_hessian(p, amplitude);
    if (!is_psd(h)) throw Error(ErrorCode::NotConvexPotential, "manufactured potential is not convex; lower the amplitude");
    out.f.values[i] = determinant(h);
    out.phi_exact.values[i] = amplitude * (prod - mean_product);
  }
  // det S matches the grid integral of f, which differs from 1 by aliasing on coarse grids.
  out.S = SymMatrix::identity(n, std::pow(out.f.integral(), 1.0 / n));
  return out;
}

}  // namespace

ManufacturedProblem manufactured_sine_problem(const TorusGrid& grid, double amplitude) {
  const double tau = 2.0 * std::numbers::pi;
  return manufactured_product(grid, amplitude, 0.0, [&](double t) {
    const double s = std::sin(tau * t), c = std::cos(tau * t);
    return Profile{s, tau * c, -tau * tau * s};
  });
}

ManufacturedProblem manufactured_rational_problem(const TorusGrid& grid, double amplitude, double c) {
  if (!(c > 1.0)) throw Error(ErrorCode::InvalidArgument, "rational profile needs c > 1");
  const double tau = 2.0 * std::numbers::pi;
  // mean of 1/(c - cos) over a period is 1/sqrt(c^2 - 1)
  const double mean_product = std::pow(c * c - 1.0, -0.5 * grid.dim());
  return manufactured_product(grid, amplitude, mean_product, [&](double t) {
    const double s = std::sin(tau * t), co = std::cos(tau * t);
    const double q = 1.0 / (c - co);
    return Profile{q, -tau * s * q * q, 2.0 * tau * tau * s * s * q * q * q - tau * tau * co * q * q};
  });
}

MatrixField oscillation_sequence(const MatrixField& b, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "oscillation index must be >= 1");
  if ((k & (k - 1)) != 0) {
    throw Error(ErrorCode::ResolutionMismatch, "oscillation index " + std::to_string(k) +
                                                   " must be a power of two so that m k is a valid grid size");
  }
  const TorusGrid out_grid(b.grid.dim(), b.grid.points_per_axis() * k);
  MatrixField out(out_grid, SymMatrix(b.grid.dim()), b.psd_flag);
  const int m = b.grid.points_per_axis();
  for (std::size_t i = 0; i < out_grid.size(); ++i) {
    MultiIndex idx = out_grid.multi_index(i);
    for (int d = 0; d < out_grid.dim(); ++d) idx[d] %= m;
    out.values[i] = b.values[b.grid.linear_index(idx)];
  }
  return out;
}

MatrixField oscillation_sequence(const MatrixField& b, int k, const TorusGrid& out_grid) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "oscillation index must be >= 1");
  if (out_grid.dim() != b.grid.dim()) throw Error(ErrorCode::ResolutionMismatch, "output grid dimension differs");
  if (out_grid.points_per_axis() < 2 * k) {
    throw Error(ErrorCode::ResolutionMismatch, "output grid cannot resolve k periods");
  }
  const int n = b.grid.dim();
  std::vector<std::vector<double>> targets(n);
  for (int d = 0; d < n; ++d) {
    for (int i = 0; i < out_grid.points_per_axis(); ++i) {
      const double y = k * out_grid.coordinate(i);
      targets[d].push_back(y - std::floor(y));
    }
  }
  MatrixField out(out_grid, SymMatrix(n), b.psd_flag);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out.set_component(i, j, spectral::resample_tensor(b.grid, b.component(i, j), targets));
  return out;
}

MatrixField epsilon_shift(const MatrixField& a, double eps) {
  if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon shift must be nonnegative");
  MatrixField out = a;
  const SymMatrix shift = SymMatrix::identity(a.grid.dim(), eps);
  for (SymMatrix& v : out.values) v += shift;
  return out;
}

std::string to_string(Family f) {
  switch (f) {
    case Family::Counterexample: return "counterexample";
    case Family::Oscillation: return "oscillation";
    case Family::Mollified: return "mollified";
    case Family::Constant: return "constant";
  }
  return "constant";
}

Family family_from_string(const std::string& s) {
  if (s == "counterexample") return Family::Counterexample;
  if (s == "oscillation") return Family::Oscillation;
  if (s == "mollified") return Family::Mollified;
  if (s == "constant") return Family::Constant;
  throw Error(ErrorCode::InvalidArgument, "unknown family '" + s + "'");
}

void SequenceSpec::validate() const {
  if (k_range.empty()) throw Error(ErrorCode::InvalidArgument, "k_range is empty");
  switch (family) {
    case Family::Counterexample:
      if (static_cast<int>(center.size()) != n) throw Error(ErrorCode::InvalidArgument, "center must have n coordinates");
      for (int k : k_range) {
        if (k < 1) throw Error(ErrorCode::InvalidArgument, "counterexample indices must be >= 1");
      }
      (void)TorusGrid(n, m);
      break;
    case Family::Mollified:
      if (mollify_eps.size() != k_range.size()) {
        throw Error(ErrorCode::InvalidArgument, "mollified family needs one eps per k");
      }
      [[fallthrough]];
    case Family::Oscillation:
    case Family::Constant:
      if (!base) throw Error(ErrorCode::InvalidArgument, "family '" + to_string(family) + "' needs a base field");
      if (base->grid.dim() != n) throw Error(ErrorCode::InvalidArgument, "base field dimension differs from n");
      if (family == Family::Oscillation) {
        for (int k : k_range) {
          if (k < 1) throw Error(ErrorCode::InvalidArgument, "oscillation indices must be >= 1");
        }
      }
      break;
  }
}

MatrixField SequenceSpec::member(int k) const {
  switch (family) {
    case Family::Counterexample:
      return counterexample_field(n, center, k, TorusGrid(n, m)).field;
    case Family::Oscillation:
      return oscillation_sequence(*base, k);
    case Family::Mollified: {
      for (std::size_t i = 0; i < k_range.size(); ++i) {
        if (k_range[i] == k) return mollify(*base, mollify_eps[i]);
      }
      throw Error(ErrorCode::InvalidArgument, "k not in the mollification schedule");
    }
    case Family::Constant:
      return *base;
  }
  throw Error(ErrorCode::FamilyMismatch, "unknown family");
}

}  // namespace detlab
