#pragma once

// Uniform periodic grids on the unit torus [0,1)^n and the field containers
// sampled on them. Node index is row-major with axis 0 slowest.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "detlab/sym_matrix.hpp"

namespace detlab {

using Point = std::vector<double>;
using MultiIndex = std::array<int, kMaxDim>;

class TorusGrid {
 public:
  static constexpr std::size_t kMaxNodes = std::size_t{1} << 24;

  TorusGrid() = default;
  /// m must be a power of two >= 8 and m^n <= 2^24.
  TorusGrid(int n, int m);

  int dim() const noexcept { return n_; }
  int points_per_axis() const noexcept { return m_; }
  std::size_t size() const noexcept { return size_; }
  double spacing() const noexcept { return 1.0 / m_; }
  double cell_volume() const noexcept { return 1.0 / static_cast<double>(size_); }

  MultiIndex multi_index(std::size_t linear) const noexcept;
  std::size_t linear_index(const MultiIndex& idx) const noexcept;
  /// Index with periodic wrap on every axis.
  std::size_t wrapped_index(MultiIndex idx) const noexcept;
  Point node(std::size_t linear) const;
  double coordinate(int i) const noexcept { return static_cast<double>(i) / m_; }

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) noexcept {
    return a.n_ == b.n_ && a.m_ == b.m_;
  }

 private:
  int n_ = 0;
  int m_ = 0;
  std::size_t size_ = 0;
};

/// Minimal-image distance on the unit torus.
double torus_distance(std::span<const double> x, std::span<const double> y);

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);
/// Grid average (= integral over the unit torus) with compensated summation.
double grid_mean(std::span<const double> values);

struct ScalarField {
  TorusGrid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const TorusGrid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  ScalarField(const TorusGrid& g, std::vector<double> v);

  double integral() const { return grid_mean(values); }
  double max_abs() const;
};

/// n components per node, node-major.
struct VectorField {
  TorusGrid grid;
  std::vector<double> values;

  VectorField() = default;
  explicit VectorField(const TorusGrid& g) : grid(g), values(g.size() * g.dim(), 0.0) {}

  double& at(std::size_t node, int c) { return values[node * grid.dim() + c]; }
  double at(std::size_t node, int c) const { return values[node * grid.dim() + c]; }
  std::vector<double> component(int c) const;
  void set_component(int c, std::span<const double> v);
};

struct MatrixField {
  TorusGrid grid;
  std::vector<SymMatrix> values;
  bool psd_flag = false;

  MatrixField() = default;
  MatrixField(const TorusGrid& g, const SymMatrix& fill, bool psd = false)
      : grid(g), values(g.size(), fill), psd_flag(psd) {}

  /// Component (i,j) as a flat node array.
  std::vector<double> component(int i, int j) const;
  void set_component(int i, int j, std::span<const double> v);
  bool all_finite() const;
};

/// Throws GridMismatch unless both grids agree.
void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what);

}  // namespace detlab
