#include "detlab/torus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detlab/error.hpp"

namespace detlab {

TorusGrid::TorusGrid(int n, int m) : n_(n), m_(m) {
  if (n < 1 || n > kMaxDim) {
    throw Error(ErrorCode::UnsupportedDimension, "grid dimension " + std::to_string(n) + " outside 1..8");
  }
  if (m < 8 || (m & (m - 1)) != 0) {
    throw Error(ErrorCode::InvalidArgument, "points per axis must be a power of two >= 8, got " + std::to_string(m));
  }
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) {
    total *= static_cast<std::size_t>(m);
    if (total > kMaxNodes) {
      throw Error(ErrorCode::InvalidArgument, "grid exceeds the 2^24 node cap");
    }
  }
  size_ = total;
}

MultiIndex TorusGrid::multi_index(std::size_t linear) const noexcept {
  MultiIndex idx{};
  for (int d = n_ - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(linear % m_);
    linear /= m_;
  }
  return idx;
}

std::size_t TorusGrid::linear_index(const MultiIndex& idx) const noexcept {
  std::size_t lin = 0;
  for (int d = 0; d < n_; ++d) lin = lin * m_ + static_cast<std::size_t>(idx[d]);
  return lin;
}

std::size_t TorusGrid::wrapped_index(MultiIndex idx) const noexcept {
  for (int d = 0; d < n_; ++d) idx[d] = ((idx[d] % m_) + m_) % m_;
  return linear_index(idx);
}

Point TorusGrid::node(std::size_t linear) const {
  const MultiIndex idx = multi_index(linear);
  Point p(n_);
  for (int d = 0; d < n_; ++d) p[d] = coordinate(idx[d]);
  return p;
}

double torus_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    double t = x[d] - y[d];
    t -= std::round(t);
    s += t * t;
  }
  return std::sqrt(s);
}

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double grid_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return compensated_sum(values) / static_cast<double>(values.size());
}

ScalarField::ScalarField(const TorusGrid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw Error(ErrorCode::GridMismatch, "scalar values do not match grid size");
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> VectorField::component(int c) const {
  const int n = grid.dim();
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values[i * n + c];
  return out;
}

void VectorField::set_component(int c, std::span<const double> v) {
  const int n = grid.dim();
  for (std::size_t i = 0; i < grid.size(); ++i) values[i * n + c] = v[i];
}

std::vector<double> MatrixField::component(int i, int j) const {
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) out[k] = values[k](i, j);
  return out;
}

void MatrixField::set_component(int i, int j, std::span<const double> v) {
  for (std::size_t k = 0; k < values.size(); ++k) values[k].set(i, j, v[k]);
}

bool MatrixField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](const SymMatrix& s) { return s.is_finite(); });
}

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorCode::GridMismatch,
                std::string(what) + ": grids differ (" + std::to_string(a.dim()) + "," +
                    std::to_string(a.points_per_axis()) + ") vs (" + std::to_string(b.dim()) + "," +
                    std::to_string(b.points_per_axis()) + ")");
  }
}

}  // namespace detlab
