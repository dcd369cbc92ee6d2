#pragma once

// Dense complex linear algebra shared by every other module. Matrices are
// plain Eigen::MatrixXcd values; all functions are pure.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "spinsim/errors.hpp"

namespace spinsim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kPositivityTolerance = 1e-10;
inline constexpr double kUnitaryTolerance = 1e-8;

namespace detail {

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionError(std::string(what) + ": expected a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

inline void require_same_dim(const Matrix& a, const Matrix& b, const char* what) {
  require_square(a, what);
  require_square(b, what);
  if (a.rows() != b.rows()) {
    throw DimensionError(std::string(what) + ": incompatible operands of dimension " +
                         std::to_string(a.rows()) + " and " + std::to_string(b.rows()));
  }
}

}  // namespace detail

inline Matrix identity(Index dim) {
  if (dim < 1) throw DimensionError("identity: dimension must be positive");
  return Matrix::Identity(dim, dim);
}

inline Matrix zeros(Index dim) {
  if (dim < 1) throw DimensionError("zeros: dimension must be positive");
  return Matrix::Zero(dim, dim);
}

inline Matrix adjoint(const Matrix& m) { return m.adjoint(); }

inline Complex trace(const Matrix& m) { return m.trace(); }

/// AB - BA.
inline Matrix commutator(const Matrix& a, const Matrix& b) {
  detail::require_same_dim(a, b, "commutator");
  return a * b - b * a;
}

/// Largest entrywise modulus.
inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  detail::require_same_dim(a, b, "max_abs_diff");
  return max_abs(a - b);
}

inline bool is_hermitian(const Matrix& m, double tol = kHermitianTolerance) {
  return m.rows() == m.cols() && max_abs(m - m.adjoint()) <= tol;
}

inline bool is_anti_hermitian(const Matrix& m, double tol = kHermitianTolerance) {
  return m.rows() == m.cols() && max_abs(m + m.adjoint()) <= tol;
}

/// Entrywise max |U†U - 1|.
inline double unitarity_defect(const Matrix& u) {
  detail::require_square(u, "unitarity_defect");
  return max_abs(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols()));
}

inline bool is_unitary(const Matrix& u, double tol = kUnitaryTolerance) {
  return u.rows() == u.cols() && unitarity_defect(u) <= tol;
}

/// Spectral decomposition H = V diag(values) V† of a Hermitian matrix.
/// Eigenvalues ascend. Within a degenerate eigenspace the choice of
/// eigenvectors is arbitrary.
struct EigenSystem {
  RealVector values;
  Matrix vectors;
};

inline EigenSystem eigensystem(const Matrix& h) {
  detail::require_square(h, "eigensystem");
  const Matrix sym = 0.5 * (h + h.adjoint());
  const Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigensystem: Hermitian eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline RealVector eigenvalues(const Matrix& h) { return eigensystem(h).values; }

/// f(H) = V diag(f(λ)) V† for Hermitian H.
template <typename F>
Matrix apply_spectral(const EigenSystem& es, F&& f) {
  Vector d(es.values.size());
  for (Index k = 0; k < es.values.size(); ++k) d(k) = f(es.values(k));
  return es.vectors * d.asDiagonal() * es.vectors.adjoint();
}

/// exp(scale · H) for Hermitian H.
inline Matrix hermitian_exp(const Matrix& h, Complex scale) {
  return apply_spectral(eigensystem(h), [scale](double x) { return std::exp(scale * x); });
}

/// exp(-i 2π H t), H in MHz and t in μs.
inline Matrix propagator(const Matrix& h, double t) {
  return hermitian_exp(h, Complex(0.0, -kTwoPi * t));
}

/// Matrix exponential by eigendecomposition. Hermitian and anti-Hermitian
/// inputs go through the Hermitian eigensolver, which keeps exp(-iH) unitary
/// to eigensolver precision. Other (assumed diagonalizable) inputs use a
/// general complex eigendecomposition.
inline Matrix matrix_exp(const Matrix& m) {
  detail::require_square(m, "matrix_exp");
  const double scale = std::max(1.0, max_abs(m));
  if (is_anti_hermitian(m, 1e-13 * scale)) {
    // m = -i H with H = i m Hermitian.
    return hermitian_exp(kI * m, -kI);
  }
  if (is_hermitian(m, 1e-13 * scale)) {
    return hermitian_exp(m, 1.0);
  }
  const Eigen::ComplexEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("matrix_exp: eigensolver did not converge");
  }
  const Vector d = solver.eigenvalues().array().exp();
  const Matrix& v = solver.eigenvectors();
  return v * d.asDiagonal() * v.inverse();
}

/// Kronecker product; the first factor carries the slow index.
inline Matrix tensor_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline Matrix tensor_product(std::span<const Matrix> factors) {
  if (factors.empty()) throw DimensionError("tensor_product: no factors");
  Matrix out = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) out = tensor_product(out, factors[k]);
  return out;
}

/// Traces out subsystem `traced_index` of a matrix on ⊗_k C^{dims[k]}.
inline Matrix partial_trace(const Matrix& m, std::span<const Index> dims, Index traced_index) {
  detail::require_square(m, "partial_trace");
  if (dims.empty()) throw DimensionError("partial_trace: empty subsystem list");
  Index total = 1;
  for (Index d : dims) {
    if (d < 1) throw DimensionError("partial_trace: subsystem dimensions must be positive");
    total *= d;
  }
  if (total != m.rows()) {
    throw DimensionError("partial_trace: product of subsystem dimensions (" +
                         std::to_string(total) + ") does not match matrix dimension (" +
                         std::to_string(m.rows()) + ")");
  }
  if (traced_index < 0 || traced_index >= static_cast<Index>(dims.size())) {
    throw DimensionError("partial_trace: traced_index " + std::to_string(traced_index) +
                         " out of range for " + std::to_string(dims.size()) + " subsystems");
  }

  const Index traced = dims[static_cast<std::size_t>(traced_index)];
  // Stride of the traced subsystem; indices split as (outer, traced, inner).
  Index inner = 1;
  for (std::size_t k = static_cast<std::size_t>(traced_index) + 1; k < dims.size(); ++k) {
    inner *= dims[k];
  }
  const Index reduced = total / traced;
  auto full_index = [&](Index r, Index t) {
    const Index outer = r / inner;
    const Index in = r % inner;
    return (outer * traced + t) * inner + in;
  };

  Matrix out = Matrix::Zero(reduced, reduced);
  for (Index i = 0; i < reduced; ++i) {
    for (Index j = 0; j < reduced; ++j) {
      Complex acc{0.0, 0.0};
      for (Index t = 0; t < traced; ++t) acc += m(full_index(i, t), full_index(j, t));
      out(i, j) = acc;
    }
  }
  return out;
}

inline Matrix partial_trace(const Matrix& m, std::initializer_list<Index> dims, Index traced_index) {
  const std::vector<Index> d(dims);
  return partial_trace(m, std::span<const Index>(d), traced_index);
}

/// A Hermitian, unit-trace, positive semidefinite matrix. The constructor
/// validates; instances are immutable.
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix m) : m_(std::move(m)) {
    detail::require_square(m_, "DensityMatrix");
    const double herm = max_abs(m_ - m_.adjoint());
    if (herm > kHermitianTolerance) {
      throw DomainError("DensityMatrix: not Hermitian (max |ρ - ρ†| = " + std::to_string(herm) + ")");
    }
    const Complex tr = m_.trace();
    if (std::abs(tr - 1.0) > kTraceTolerance) {
      throw DomainError("DensityMatrix: trace " + std::to_string(tr.real()) + " differs from 1");
    }
    const double min_eig = eigenvalues(m_).minCoeff();
    if (min_eig < -kPositivityTolerance) {
      throw DomainError("DensityMatrix: negative eigenvalue " + std::to_string(min_eig));
    }
  }

  /// Normalizes a Hermitian PSD matrix by its trace before validation.
  static DensityMatrix normalized(const Matrix& m) {
    const Complex tr = m.trace();
    if (std::abs(tr) == 0.0) throw DomainError("DensityMatrix: zero trace cannot be normalized");
    return DensityMatrix(m / tr.real());
  }

  static DensityMatrix maximally_mixed(Index dim) {
    return DensityMatrix(identity(dim) / static_cast<double>(dim));
  }

  static DensityMatrix pure(const Vector& psi) {
    const double n = psi.norm();
    if (n == 0.0) throw DomainError("DensityMatrix::pure: zero state vector");
    const Vector u = psi / n;
    return DensityMatrix(u * u.adjoint());
  }

  static DensityMatrix basis_state(Index dim, Index k) {
    if (k < 0 || k >= dim) throw DomainError("DensityMatrix::basis_state: index out of range");
    Vector psi = Vector::Zero(dim);
    psi(k) = 1.0;
    return pure(psi);
  }

  const Matrix& matrix() const noexcept { return m_; }
  Index dim() const noexcept { return m_.rows(); }
  double population(Index k) const { return m_(k, k).real(); }
  RealVector populations() const { return m_.diagonal().real(); }

 private:
  Matrix m_;
};

/// Tr(ρ O).
inline Complex expectation(const Matrix& rho, const Matrix& op) {
  detail::require_same_dim(rho, op, "expectation");
  return (rho * op).trace();
}

inline Complex expectation(const DensityMatrix& rho, const Matrix& op) {
  return expectation(rho.matrix(), op);
}

/// Debug dump: one row per line, entries `re+imi` at 12 significant digits.
inline std::string format_matrix(const Matrix& m) {
  std::string out;
  char buf[96];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const Complex z = m(i, j);
      std::snprintf(buf, sizeof buf, "%.12g%+.12gi", z.real(), z.imag());
      if (j > 0) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace spinsim
