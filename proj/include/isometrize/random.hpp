#pragma once

// Seeded generators for sampled checks and for test-case construction.

#include <cstdint>
#include <cstdlib>
#include <random>
#include <string>

#include "isometrize/operator_core.hpp"

namespace isometrize {

using Rng = std::mt19937_64;

/// Seed from ISOMETRIZE_SEED, default 0.
inline std::uint64_t seed_from_env() {
  const char* raw = std::getenv("ISOMETRIZE_SEED");
  if (raw == nullptr || *raw == '\0') return 0;
  try {
    return std::stoull(raw);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("ISOMETRIZE_SEED is not an integer: ") + raw);
  }
}

inline ComplexMatrix random_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      double re = normal(rng);
      double im = normal(rng);
      m(i, j) = Complex(re, im);
    }
  return m;
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
inline ComplexMatrix random_unitary(Eigen::Index n, Rng& rng) {
  ComplexMatrix g = random_gaussian(n, n, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < n; ++k) {
    Complex d = r(k, k);
    double a = std::abs(d);
    if (a > 0.0) q.col(k) *= d / a;
  }
  return q;
}

/// Diagonal of unit-modulus entries with independent uniform phases.
inline ComplexVector random_phases(Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  ComplexVector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = std::polar(1.0, angle(rng));
  return v;
}

/// Invertible matrix with singular values log-uniform in [1, cond], the
/// extremes attained (so its condition number is exactly cond, n >= 2).
inline ComplexMatrix random_conditioned(Eigen::Index n, double cond, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RealVector s(n);
  for (Eigen::Index k = 0; k < n; ++k) s(k) = std::exp(std::log(cond) * unit(rng));
  s(0) = 1.0;
  if (n > 1) s(n - 1) = cond;
  ComplexMatrix u = random_unitary(n, rng);
  ComplexMatrix v = random_unitary(n, rng);
  return u * s.cast<Complex>().asDiagonal() * v.adjoint();
}

}  // namespace isometrize
