#pragma once

// Dense symmetric matrices of dimension 1..8 stored as a packed upper
// triangle, plus the determinant / cofactor / spectral queries the field
// code needs at every grid node.

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace detlab {

inline constexpr int kMaxDim = 8;

class SymMatrix {
 public:
  static constexpr std::size_t kMaxPacked = kMaxDim * (kMaxDim + 1) / 2;

  SymMatrix() = default;
  /// Zero matrix of dimension n (1 <= n <= 8).
  explicit SymMatrix(int n);

  static SymMatrix identity(int n, double scale = 1.0);
  static SymMatrix diagonal(std::span<const double> diag);
  static SymMatrix diagonal(std::initializer_list<double> diag);
  /// Full row list; throws unless the rows describe an exactly symmetric matrix.
  static SymMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// Upper triangle row-wise: (0,0),(0,1),...,(0,n-1),(1,1),...
  static SymMatrix from_packed(int n, std::span<const double> packed);

  int dim() const noexcept { return n_; }
  std::size_t packed_size() const noexcept { return packed_size_for(n_); }
  static constexpr std::size_t packed_size_for(int n) noexcept {
    return static_cast<std::size_t>(n) * (n + 1) / 2;
  }

  double operator()(int i, int j) const noexcept { return a_[index(i, j)]; }
  void set(int i, int j, double v) noexcept { a_[index(i, j)] = v; }

  std::span<const double> packed() const noexcept { return {a_.data(), packed_size()}; }
  std::span<double> packed() noexcept { return {a_.data(), packed_size()}; }

  double trace() const noexcept;
  double frobenius_norm() const noexcept;
  /// Largest absolute eigenvalue.
  double operator_norm() const;
  bool is_finite() const noexcept;

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s) noexcept;

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(SymMatrix a, double s) noexcept { return a *= s; }
  friend SymMatrix operator*(double s, SymMatrix a) noexcept { return a *= s; }
  friend bool operator==(const SymMatrix& a, const SymMatrix& b) noexcept;

 private:
  std::size_t index(int i, int j) const noexcept {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i * n_ - i * (i - 1) / 2 + (j - i));
  }

  int n_ = 0;
  std::array<double, kMaxPacked> a_{};
};

/// Ascending eigenvalues.
class Spectrum {
 public:
  Spectrum() = default;
  Spectrum(int n, const std::array<double, kMaxDim>& ascending) : n_(n), ev_(ascending) {}

  int size() const noexcept { return n_; }
  double operator[](int i) const noexcept { return ev_[i]; }
  double min() const noexcept { return ev_[0]; }
  double max() const noexcept { return ev_[n_ - 1]; }
  std::span<const double> values() const noexcept { return {ev_.data(), static_cast<std::size_t>(n_)}; }

 private:
  int n_ = 0;
  std::array<double, kMaxDim> ev_{};
};

struct Eigendecomposition {
  Spectrum spectrum;
  /// Column-major n x n; column i is the unit eigenvector of spectrum[i].
  std::vector<double> vectors;
};

double determinant(const SymMatrix& a);
SymMatrix cofactor(const SymMatrix& a);
Spectrum spectrum(const SymMatrix& a);
Eigendecomposition eigendecompose(const SymMatrix& a);

/// M_i(A): i-th elementary symmetric polynomial of the eigenvalues, M_0 = 1.
double elementary_symmetric(const SymMatrix& a, int i);
/// All of M_0..M_n from one eigensolve.
std::vector<double> elementary_symmetric_all(const SymMatrix& a);
/// c_0..c_n with det(t Id - A) = sum c_i t^i.
std::vector<double> char_poly_coeffs(const SymMatrix& a);

/// tr(A B) for symmetric A, B.
double trace_product(const SymMatrix& a, const SymMatrix& b);

double psd_tolerance(const SymMatrix& a);
bool is_psd(const SymMatrix& a);

}  // namespace detlab
