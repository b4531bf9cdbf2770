#pragma once

// Dense complex linear algebra shared by every other module. The Hermitian
// eigendecomposition is the single spectral kernel: square roots, PSD tests
// and spectral bounds all go through herm_eigen.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "isometrize/errors.hpp"

namespace isometrize {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

struct Tolerances {
  double hermitian = 1e-12;
  double psd_clamp = 1e-12;
  double singular = 1e-14;
};

inline bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

inline void require_square(const ComplexMatrix& m, const char* what = "matrix") {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw Error(ErrorCode::NotSquare, std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                                          std::to_string(m.cols()));
}

inline ComplexMatrix identity(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

inline ComplexMatrix adjoint(const ComplexMatrix& m) { return m.adjoint(); }

/// Largest singular value.
inline double op_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

inline double smallest_singular_value(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

/// A square matrix that passed the Hermitian test. Stored exactly
/// Hermitian (the skew part below tolerance is discarded).
class HermitianMatrix {
 public:
  explicit HermitianMatrix(const ComplexMatrix& m, double tol = Tolerances{}.hermitian) {
    require_square(m, "Hermitian candidate");
    double skew = op_norm(m - m.adjoint());
    double scale = op_norm(m);
    if (skew > tol * scale)
      throw Error(ErrorCode::NotHermitian,
                  "||M - M*|| = " + std::to_string(skew) + " exceeds " + std::to_string(tol) + " * ||M||");
    m_ = 0.5 * (m + m.adjoint());
  }

  /// Symmetrizes without a tolerance check; for matrices Hermitian by construction.
  static HermitianMatrix from_trusted(const ComplexMatrix& m) {
    HermitianMatrix h;
    h.m_ = 0.5 * (m + m.adjoint());
    return h;
  }

  const ComplexMatrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }

 private:
  HermitianMatrix() = default;
  ComplexMatrix m_;
};

struct SpectralDecomposition {
  RealVector eigenvalues;      // ascending
  ComplexMatrix eigenvectors;  // unitary, columns

  ComplexMatrix reconstruct() const {
    return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
  }
};

inline SpectralDecomposition herm_eigen(const HermitianMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m.matrix());
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::NotConverged, "Hermitian eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline SpectralDecomposition herm_eigen(const ComplexMatrix& m) { return herm_eigen(HermitianMatrix(m)); }

/// Eigenvalues only, ascending. Caller guarantees the input is Hermitian.
inline RealVector herm_eigenvalues(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

struct SpectralRange {
  double min = 0.0;
  double max = 0.0;
};

inline SpectralRange spectral_range(const ComplexMatrix& hermitian) {
  RealVector ev = herm_eigenvalues(hermitian);
  return {ev(0), ev(ev.size() - 1)};
}

/// Positive square root. Eigenvalues in [-psd_clamp * ||M||, 0) are treated as 0.
inline HermitianMatrix herm_sqrt(const HermitianMatrix& m, double psd_clamp = Tolerances{}.psd_clamp) {
  SpectralDecomposition sd = herm_eigen(m);
  double scale = std::max(std::abs(sd.eigenvalues(0)), std::abs(sd.eigenvalues(sd.eigenvalues.size() - 1)));
  if (sd.eigenvalues(0) < -psd_clamp * scale)
    throw Error(ErrorCode::NotPSD, "smallest eigenvalue " + std::to_string(sd.eigenvalues(0)));
  RealVector roots = sd.eigenvalues.unaryExpr([](double v) { return v > 0.0 ? std::sqrt(v) : 0.0; });
  return HermitianMatrix::from_trusted(sd.eigenvectors * roots.cast<Complex>().asDiagonal() *
                                       sd.eigenvectors.adjoint());
}

/// Inverse of the positive square root; throws Singular when M is not positive definite.
inline HermitianMatrix herm_inv_sqrt(const HermitianMatrix& m, double singular_tol = Tolerances{}.singular) {
  SpectralDecomposition sd = herm_eigen(m);
  double top = sd.eigenvalues(sd.eigenvalues.size() - 1);
  if (!(sd.eigenvalues(0) > singular_tol * top))
    throw Error(ErrorCode::Singular, "matrix is not positive definite");
  RealVector inv = sd.eigenvalues.unaryExpr([](double v) { return 1.0 / std::sqrt(v); });
  return HermitianMatrix::from_trusted(sd.eigenvectors * inv.cast<Complex>().asDiagonal() *
                                       sd.eigenvectors.adjoint());
}

/// ||T*T - I||
inline double isometry_residual(const ComplexMatrix& t) {
  require_square(t);
  return op_norm(t.adjoint() * t - identity(t.rows()));
}

/// max(||T*T - I||, ||TT* - I||)
inline double unitary_residual(const ComplexMatrix& t) {
  require_square(t);
  ComplexMatrix id = identity(t.rows());
  return std::max(op_norm(t.adjoint() * t - id), op_norm(t * t.adjoint() - id));
}

inline double condition_number(const ComplexMatrix& l, double singular_tol = Tolerances{}.singular) {
  require_square(l);
  Eigen::JacobiSVD<ComplexMatrix> svd(l);
  const RealVector& s = svd.singularValues();
  double hi = s(0);
  double lo = s(s.size() - 1);
  if (!(hi > 0.0) || lo <= singular_tol * hi)
    throw Error(ErrorCode::Singular, "smallest singular value " + std::to_string(lo));
  return hi / lo;
}

/// Inverse via LU; Singular if the condition number is past the tolerance.
inline ComplexMatrix checked_inverse(const ComplexMatrix& m) {
  condition_number(m);
  return m.partialPivLu().inverse();
}

/// X -> M* X M. Result symmetrized; only call with Hermitian X.
inline ComplexMatrix congruence(const ComplexMatrix& m, const ComplexMatrix& x) {
  ComplexMatrix y = m.adjoint() * x * m;
  return 0.5 * (y + y.adjoint());
}

/// Integer matrix power, negative exponents through the supplied inverse.
inline ComplexMatrix matrix_power(const ComplexMatrix& m, const ComplexMatrix& m_inv, long long k) {
  ComplexMatrix base = k >= 0 ? m : m_inv;
  unsigned long long e = k >= 0 ? static_cast<unsigned long long>(k) : static_cast<unsigned long long>(-k);
  ComplexMatrix result = identity(m.rows());
  while (e > 0) {
    if (e & 1ULL) result = result * base;
    e >>= 1ULL;
    if (e > 0) base = base * base;
  }
  return result;
}

}  // namespace isometrize
