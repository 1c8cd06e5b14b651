#include "detlab/sym_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "detlab/error.hpp"

namespace detlab {

namespace {

void check_dim(int n) {
  if (n < 1 || n > kMaxDim) {
    throw Error(ErrorCode::UnsupportedDimension,
                "matrix dimension " + std::to_string(n) + " outside 1..8");
  }
}

using Dense = std::array<double, kMaxDim * kMaxDim>;

Dense to_dense(const SymMatrix& a) {
  Dense d{};
  const int n = a.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d[i * n + j] = a(i, j);
  return d;
}

// LU with partial pivoting on a row-major n x n array (destroyed).
double lu_determinant(Dense& d, int n) {
  double det = 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(d[r * n + c]) > std::abs(d[piv * n + c])) piv = r;
    if (d[piv * n + c] == 0.0) return 0.0;
    if (piv != c) {
      for (int j = 0; j < n; ++j) std::swap(d[c * n + j], d[piv * n + j]);
      det = -det;
    }
    const double p = d[c * n + c];
    det *= p;
    for (int r = c + 1; r < n; ++r) {
      const double l = d[r * n + c] / p;
      if (l == 0.0) continue;
      for (int j = c + 1; j < n; ++j) d[r * n + j] -= l * d[c * n + j];
    }
  }
  return det;
}

double minor_determinant(const SymMatrix& a, int skip_row, int skip_col) {
  const int n = a.dim();
  const int k = n - 1;
  Dense d{};
  for (int i = 0, r = 0; i < n; ++i) {
    if (i == skip_row) continue;
    for (int j = 0, c = 0; j < n; ++j) {
      if (j == skip_col) continue;
      d[r * k + c] = a(i, j);
      ++c;
    }
    ++r;
  }
  if (k == 1) return d[0];
  if (k == 2) return d[0] * d[3] - d[1] * d[2];
  if (k == 3) {
    return d[0] * (d[4] * d[8] - d[5] * d[7]) - d[1] * (d[3] * d[8] - d[5] * d[6]) +
           d[2] * (d[3] * d[7] - d[4] * d[6]);
  }
  return lu_determinant(d, k);
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EigenNonConvergence: return "EigenNonConvergence";
    case ErrorCode::NotPsd: return "NotPSD";
    case ErrorCode::UnderResolvedKernel: return "UnderResolvedKernel";
    case ErrorCode::UnderResolvedBall: return "UnderResolvedBall";
    case ErrorCode::NotConvexPotential: return "NotConvexPotential";
    case ErrorCode::ResolutionMismatch: return "ResolutionMismatch";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::DegenerateMean: return "DegenerateMean";
    case ErrorCode::NegativeF: return "NegativeF";
    case ErrorCode::NewtonStall: return "NewtonStall";
    case ErrorCode::PositivityLoss: return "PositivityLoss";
    case ErrorCode::NotUniformlyElliptic: return "NotUniformlyElliptic";
    case ErrorCode::FamilyMismatch: return "FamilyMismatch";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Parse: return "ParseError";
  }
  return "Unknown";
}

SymMatrix::SymMatrix(int n) : n_(n) { check_dim(n); }

SymMatrix SymMatrix::identity(int n, double scale) {
  SymMatrix m(n);
  for (int i = 0; i < n; ++i) m.set(i, i, scale);
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(static_cast<int>(diag.size()));
  for (int i = 0; i < m.dim(); ++i) m.set(i, i, diag[i]);
  return m;
}

SymMatrix SymMatrix::diagonal(std::initializer_list<double> diag) {
  return diagonal(std::span<const double>(diag.begin(), diag.size()));
}

SymMatrix SymMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int n = static_cast<int>(rows.size());
  SymMatrix m(n);
  std::vector<std::vector<double>> full;
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != n) throw Error(ErrorCode::InvalidArgument, "matrix rows are not square");
    full.emplace_back(r);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      if (full[i][j] != full[j][i]) throw Error(ErrorCode::InvalidArgument, "matrix is not symmetric");
      m.set(i, j, full[i][j]);
    }
  }
  return m;
}

SymMatrix SymMatrix::from_packed(int n, std::span<const double> packed) {
  SymMatrix m(n);
  if (packed.size() != m.packed_size()) {
    throw Error(ErrorCode::InvalidArgument, "packed upper triangle has wrong length");
  }
  std::copy(packed.begin(), packed.end(), m.a_.begin());
  return m;
}

double SymMatrix::trace() const noexcept {
  double t = 0.0;
  for (int i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

double SymMatrix::frobenius_norm() const noexcept {
  double s = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) s += (*this)(i, j) * (*this)(i, j);
  return std::sqrt(s);
}

double SymMatrix::operator_norm() const {
  const Spectrum s = spectrum(*this);
  return std::max(std::abs(s.min()), std::abs(s.max()));
}

bool SymMatrix::is_finite() const noexcept {
  return std::all_of(a_.begin(), a_.begin() + packed_size(), [](double v) { return std::isfinite(v); });
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  if (o.n_ != n_) throw Error(ErrorCode::InvalidArgument, "dimension mismatch in matrix sum");
  for (std::size_t i = 0; i < packed_size(); ++i) a_[i] += o.a_[i];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  if (o.n_ != n_) throw Error(ErrorCode::InvalidArgument, "dimension mismatch in matrix difference");
  for (std::size_t i = 0; i < packed_size(); ++i) a_[i] -= o.a_[i];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) noexcept {
  for (std::size_t i = 0; i < packed_size(); ++i) a_[i] *= s;
  return *this;
}

bool operator==(const SymMatrix& a, const SymMatrix& b) noexcept {
  return a.n_ == b.n_ && std::equal(a.a_.begin(), a.a_.begin() + a.packed_size(), b.a_.begin());
}

double determinant(const SymMatrix& a) {
  const int n = a.dim();
  switch (n) {
    case 1: return a(0, 0);
    case 2: return a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1);
    case 3:
      return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(1, 2)) -
             a(0, 1) * (a(0, 1) * a(2, 2) - a(1, 2) * a(0, 2)) +
             a(0, 2) * (a(0, 1) * a(1, 2) - a(1, 1) * a(0, 2));
    default: {
      Dense d = to_dense(a);
      return lu_determinant(d, n);
    }
  }
}

SymMatrix cofactor(const SymMatrix& a) {
  const int n = a.dim();
  SymMatrix c(n);
  switch (n) {
    case 1:
      c.set(0, 0, 1.0);
      return c;
    case 2:
      c.set(0, 0, a(1, 1));
      c.set(1, 1, a(0, 0));
      c.set(0, 1, -a(0, 1));
      return c;
    case 3:
      c.set(0, 0, a(1, 1) * a(2, 2) - a(1, 2) * a(1, 2));
      c.set(1, 1, a(0, 0) * a(2, 2) - a(0, 2) * a(0, 2));
      c.set(2, 2, a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1));
      c.set(0, 1, a(0, 2) * a(1, 2) - a(0, 1) * a(2, 2));
      c.set(0, 2, a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1));
      c.set(1, 2, a(0, 1) * a(0, 2) - a(0, 0) * a(1, 2));
      return c;
    default:
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
          c.set(i, j, sign * minor_determinant(a, i, j));
        }
      }
      return c;
  }
}

Eigendecomposition eigendecompose(const SymMatrix& a) {
  const int n = a.dim();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = a(i, j);
  // Eigenvalues come back ascending.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::EigenNonConvergence, "symmetric eigensolver did not converge");
  }
  std::array<double, kMaxDim> ev{};
  Eigendecomposition out;
  out.vectors.resize(static_cast<std::size_t>(n) * n);
  for (int c = 0; c < n; ++c) {
    ev[c] = solver.eigenvalues()(c);
    for (int r = 0; r < n; ++r) out.vectors[c * n + r] = solver.eigenvectors()(r, c);
  }
  out.spectrum = Spectrum(n, ev);
  return out;
}

Spectrum spectrum(const SymMatrix& a) {
  const int n = a.dim();
  std::array<double, kMaxDim> ev{};
  if (n == 1) {
    ev[0] = a(0, 0);
    return Spectrum(1, ev);
  }
  if (n == 2) {
    const double mid = 0.5 * (a(0, 0) + a(1, 1));
    const double half = 0.5 * (a(0, 0) - a(1, 1));
    const double r = std::hypot(half, a(0, 1));
    // Larger-magnitude root first, the other from the determinant to avoid cancellation.
    const double big = mid >= 0 ? mid + r : mid - r;
    const double small = big != 0.0 ? determinant(a) / big : 0.0;
    ev[0] = std::min(big, small);
    ev[1] = std::max(big, small);
    return Spectrum(2, ev);
  }
  return eigendecompose(a).spectrum;
}

std::vector<double> elementary_symmetric_all(const SymMatrix& a) {
  const Spectrum s = spectrum(a);
  const int n = a.dim();
  std::vector<double> e(static_cast<std::size_t>(n) + 1, 0.0);
  e[0] = 1.0;
  for (int k = 0; k < n; ++k) {
    for (int i = k + 1; i >= 1; --i) e[i] += s[k] * e[i - 1];
  }
  return e;
}

double elementary_symmetric(const SymMatrix& a, int i) {
  if (i < 0 || i > a.dim()) {
    throw Error(ErrorCode::IndexOutOfRange,
                "elementary symmetric index " + std::to_string(i) + " outside 0.." + std::to_string(a.dim()));
  }
  if (i == 0) return 1.0;
  return elementary_symmetric_all(a)[i];
}

std::vector<double> char_poly_coeffs(const SymMatrix& a) {
  const int n = a.dim();
  const std::vector<double> m = elementary_symmetric_all(a);
  std::vector<double> c(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    const double sign = ((i + n) % 2 == 0) ? 1.0 : -1.0;
    c[i] = sign * m[n - i];
  }
  return c;
}

double trace_product(const SymMatrix& a, const SymMatrix& b) {
  const int n = a.dim();
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    t += a(i, i) * b(i, i);
    for (int j = i + 1; j < n; ++j) t += 2.0 * a(i, j) * b(i, j);
  }
  return t;
}

double psd_tolerance(const SymMatrix& a) { return 1e-10 * (1.0 + a.operator_norm()); }

bool is_psd(const SymMatrix& a) {
  const Spectrum s = spectrum(a);
  const double norm = std::max(std::abs(s.min()), std::abs(s.max()));
  return s.min() >= -1e-10 * (1.0 + norm);
}

}  // namespace detlab
