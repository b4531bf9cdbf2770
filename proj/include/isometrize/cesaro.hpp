#pragma once

// Similarity of a single operator to an isometry or a unitary, built from
// Cesàro averages of the power Grams P_n = T*^n T^n.
//
// The averaged Gram A_N = (1/N) sum_{n<N} P_n carries the quadratic form
// (1/N) sum ||T^n x||^2. When its eigenvalues stay in [m^2, M^2] and T has
// unimodular spectrum, the limit F of A_N satisfies T* F T = F, so
// D = F^{1/2} turns T into an isometry: D T D^{-1}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isometrize/errors.hpp"
#include "isometrize/limit.hpp"
#include "isometrize/operator_core.hpp"

namespace isometrize {

/// Default Cesàro horizon: 4096 up to dimension 16, shrinking quadratically after.
inline std::int64_t default_horizon(Eigen::Index dim) {
  if (dim <= 16) return 4096;
  double scaled = 4096.0 * (16.0 / static_cast<double>(dim)) * (16.0 / static_cast<double>(dim));
  return std::max<std::int64_t>(256, static_cast<std::int64_t>(scaled));
}

/// Running Cesàro average. Holds A_N and the next summand P_N = T*^N T^N.
class CesaroState {
 public:
  explicit CesaroState(ComplexMatrix t) : t_(std::move(t)) {
    require_square(t_, "operator");
    average_ = identity(t_.rows());
    power_gram_ = congruence(t_, average_);
  }

  /// A_{N+1} = (N A_N + P_N) / (N + 1),  P_{N+1} = T* P_N T.
  CesaroState advanced() const {
    CesaroState next(*this);
    next.advance();
    return next;
  }

  void advance() {
    double n = static_cast<double>(n_);
    average_ = (n * average_ + power_gram_) / (n + 1.0);
    power_gram_ = congruence(t_, power_gram_);
    ++n_;
  }

  const ComplexMatrix& op() const noexcept { return t_; }
  std::int64_t n() const noexcept { return n_; }
  const ComplexMatrix& average() const noexcept { return average_; }
  const ComplexMatrix& power_gram() const noexcept { return power_gram_; }

 private:
  ComplexMatrix t_;
  std::int64_t n_ = 1;
  ComplexMatrix average_;
  ComplexMatrix power_gram_;
};

inline HermitianMatrix cesaro_average(const ComplexMatrix& t, std::int64_t n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "N must be positive");
  CesaroState state(t);
  while (state.n() < n) state.advance();
  return HermitianMatrix::from_trusted(state.average());
}

struct BoundsEstimate {
  double m_sq = 0.0;  // inf_N lambda_min(A_N)
  double M_sq = 0.0;  // sup_N lambda_max(A_N)
  std::int64_t n_max = 0;
  bool divergent = false;
  /// lambda_min(A_N) shrinking over dyadic windows (m not bounded away from 0).
  bool lower_collapse = false;
  /// max over the tail N in [n_max/2, n_max] of ||T^N||^2 / N.
  double decay_stat = 0.0;
  /// lambda_max(A_{n}) / lambda_max(A_{n/2}) at the last dyadic step.
  double upper_growth_ratio = 0.0;

  /// Widen the estimate with a limit point of the averaged sequence.
  void include_limit(const ComplexMatrix& f) {
    SpectralRange r = spectral_range(f);
    m_sq = std::min(m_sq, r.min);
    M_sq = std::max(M_sq, r.max);
  }
};

struct CesaroOptions {
  std::int64_t n_max = 0;  // 0: default_horizon(dim)
  double tol = 1e-8;
  double eigen_tol = 1e-6;
  /// mSq below this is a lower-bound collapse regardless of the trend.
  double min_lower_bound_sq = 1e-8;
  GrowthPolicy growth{};
  LimitOptions limit{};
};

namespace detail {

struct CesaroScan {
  BoundsEstimate bounds;
  ComplexMatrix last_average;
};

inline CesaroScan cesaro_scan(const ComplexMatrix& t, std::int64_t n_max, const GrowthPolicy& growth) {
  CesaroState state(t);
  GrowthMonitor upper(growth);
  GrowthMonitor lower(growth);
  CesaroScan scan;
  BoundsEstimate& b = scan.bounds;
  b.m_sq = std::numeric_limits<double>::infinity();
  b.M_sq = 0.0;
  std::int64_t tail_start = std::max<std::int64_t>(1, n_max / 2);
  for (;;) {
    std::int64_t n = state.n();
    SpectralRange r = spectral_range(state.average());
    b.m_sq = std::min(b.m_sq, r.min);
    b.M_sq = std::max(b.M_sq, r.max);
    upper.observe(n, r.max);
    lower.observe(n, r.min > 0.0 ? 1.0 / r.min : std::numeric_limits<double>::infinity());
    // power_gram() is P_n here, so its top eigenvalue is ||T^n||^2.
    if (n >= tail_start) {
      double tn = spectral_range(state.power_gram()).max;
      b.decay_stat = std::max(b.decay_stat, tn / static_cast<double>(n));
    }
    b.n_max = n;
    if (upper.capped() || n >= n_max) break;
    state.advance();
  }
  b.divergent = upper.divergent();
  b.lower_collapse = lower.divergent();
  b.upper_growth_ratio = upper.last_ratio();
  b.m_sq = std::max(0.0, b.m_sq);
  scan.last_average = state.average();
  return scan;
}

/// One pass of X -> (1/L) sum_{n<L} T*^n X T^n.
inline ComplexMatrix cesaro_pass(const ComplexMatrix& t, const ComplexMatrix& x, std::int64_t length) {
  ComplexMatrix acc = ComplexMatrix::Zero(x.rows(), x.cols());
  ComplexMatrix term = x;
  for (std::int64_t n = 0; n < length; ++n) {
    acc += term;
    term = congruence(t, term);
  }
  return acc / static_cast<double>(length);
}

inline double fixed_point_residual(const ComplexMatrix& t, const ComplexMatrix& f) {
  return op_norm(t.adjoint() * f * t - f);
}

}  // namespace detail

inline BoundsEstimate estimate_bounds(const ComplexMatrix& t, std::int64_t n_max, const GrowthPolicy& growth = {}) {
  require_square(t, "operator");
  if (n_max < 8) throw Error(ErrorCode::InvalidArgument, "nMax must be at least 8");
  return detail::cesaro_scan(t, n_max, growth).bounds;
}

struct EigenCheck {
  bool ok = true;
  std::vector<Complex> eigenvalues;
  std::vector<Complex> offenders;
};

/// Every eigenvalue of T has modulus within tol of one.
inline EigenCheck eigen_unimodular_check(const ComplexMatrix& t, double tol = 1e-6) {
  require_square(t, "operator");
  Eigen::ComplexEigenSolver<ComplexMatrix> solver(t, false);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::NotConverged, "eigenvalue solver failed");
  EigenCheck out;
  for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
    Complex lambda = solver.eigenvalues()(k);
    out.eigenvalues.push_back(lambda);
    if (std::abs(std::abs(lambda) - 1.0) > tol) {
      out.ok = false;
      out.offenders.push_back(lambda);
    }
  }
  return out;
}

struct KConditionResult {
  bool holds = true;
  std::int64_t first_violation = 0;  // N of the first failing average, 0 if none
  double worst = 0.0;                // most negative lambda_min(A_N - m K*K)

  explicit operator bool() const noexcept { return holds; }
};

/// Operator form of the lower Cesàro bound m K*K <= A_N for all N <= nMax.
/// In finite dimension every K has closed range and finite-dimensional
/// kernel, so only this inequality remains to be checked.
inline KConditionResult k_condition_check(const ComplexMatrix& t, const ComplexMatrix& k, double m,
                                          std::int64_t n_max) {
  require_square(t, "operator");
  if (k.cols() != t.rows())
    throw Error(ErrorCode::DimensionMismatch,
                "K has " + std::to_string(k.cols()) + " columns, T has dimension " + std::to_string(t.rows()));
  ComplexMatrix kk = m * (k.adjoint() * k);
  KConditionResult out;
  CesaroState state(t);
  for (;;) {
    double lo = spectral_range(state.average() - kk).min;
    out.worst = std::min(out.worst, lo);
    if (lo < -1e-10 && out.holds) {
      out.holds = false;
      out.first_violation = state.n();
    }
    if (state.n() >= n_max) break;
    state.advance();
  }
  return out;
}

struct GramLimit {
  HermitianMatrix gram;
  bool converged = false;
  int order = 1;
  double fixed_point_residual = 0.0;
  /// Scan bounds widened by the spectrum of the limit.
  BoundsEstimate bounds;
};

namespace detail {

inline GramLimit limit_from_scan(const ComplexMatrix& t, const CesaroScan& scan, double tol,
                                 const LimitOptions& opts) {
  std::int64_t length = scan.bounds.n_max;
  std::vector<ComplexMatrix> powers;
  if (is_power_of_two(length)) powers = dyadic_powers(t, floor_log2(length));
  auto pass = [&](const ComplexMatrix& x) {
    return powers.empty() ? cesaro_pass(t, x, length) : dyadic_average(powers, x);
  };
  auto residual = [&](const ComplexMatrix& x) { return fixed_point_residual(t, x); };
  LimitResult lim = iterated_average_limit(scan.last_average, pass, residual, tol, opts);
  GramLimit out{HermitianMatrix::from_trusted(lim.gram), lim.converged, lim.order, lim.fixed_point_residual,
                scan.bounds};
  out.bounds.include_limit(out.gram.matrix());
  return out;
}

}  // namespace detail

/// Limit of the Cesàro Gram averages. Throws Diverged when the bounds
/// scan diverges; a limit that fails the fixed-point test is returned with
/// converged = false.
inline GramLimit limit_gram(const ComplexMatrix& t, double tol, std::int64_t n_max,
                            const CesaroOptions& opts = {}) {
  require_square(t, "operator");
  if (n_max < 8) throw Error(ErrorCode::InvalidArgument, "nMax must be at least 8");
  detail::CesaroScan scan = detail::cesaro_scan(t, n_max, opts.growth);
  if (scan.bounds.divergent)
    throw Error(ErrorCode::Diverged, "Cesàro averages grow without bound (lambda_max ratio " +
                                         std::to_string(scan.bounds.upper_growth_ratio) + ")");
  return detail::limit_from_scan(t, scan, tol, opts.limit);
}

enum class SimilarityKind { Isometry, Unitary };

inline std::string_view to_string(SimilarityKind k) { return k == SimilarityKind::Isometry ? "isometry" : "unitary"; }

struct SimilarityCertificate {
  /// transform * T * transform^{-1} is an isometry (or unitary).
  ComplexMatrix transform;
  SimilarityKind kind = SimilarityKind::Isometry;
  double residual = 0.0;
  double condition_number = 1.0;
  BoundsEstimate bounds;
  double gram_fixed_point_residual = 0.0;
  ComplexMatrix gram;
  ComplexMatrix conjugated;
  int averaging_order = 1;
};

namespace detail {

inline SimilarityCertificate certify(const ComplexMatrix& t, const GramLimit& lim, SimilarityKind kind,
                                     double tol) {
  SimilarityCertificate cert;
  cert.kind = kind;
  cert.bounds = lim.bounds;
  cert.gram = lim.gram.matrix();
  cert.gram_fixed_point_residual = lim.fixed_point_residual;
  cert.averaging_order = lim.order;
  HermitianMatrix d = herm_sqrt(lim.gram);
  try {
    cert.condition_number = condition_number(d.matrix());
  } catch (const Error& e) {
    throw HypothesisFailed({Hypothesis::SingularTransform}, e.what());
  }
  cert.transform = d.matrix();
  cert.conjugated = d.matrix() * t * d.matrix().partialPivLu().inverse();
  cert.residual = kind == SimilarityKind::Isometry ? isometry_residual(cert.conjugated)
                                                   : unitary_residual(cert.conjugated);
  if (!(cert.residual <= tol))
    throw HypothesisFailed({Hypothesis::GramNotConverged},
                           "conjugated residual " + std::to_string(cert.residual) + " above " + std::to_string(tol));
  return cert;
}

}  // namespace detail

/// Similarity to an isometry from the Cesàro Gram limit (K = I).
inline SimilarityCertificate isometrize(const ComplexMatrix& t, const CesaroOptions& opts = {}) {
  require_square(t, "operator");
  std::int64_t n_max = opts.n_max > 0 ? opts.n_max : default_horizon(t.rows());
  if (n_max < 8) throw Error(ErrorCode::InvalidArgument, "nMax must be at least 8");

  std::vector<Hypothesis> failed;
  std::string detail;
  EigenCheck eig = eigen_unimodular_check(t, opts.eigen_tol);
  if (!eig.ok) {
    failed.push_back(Hypothesis::EigenvalueModulus);
    detail += "eigenvalue of modulus " + std::to_string(std::abs(eig.offenders.front())) + "; ";
  }
  detail::CesaroScan scan = detail::cesaro_scan(t, n_max, opts.growth);
  if (scan.bounds.divergent) {
    failed.push_back(Hypothesis::DivergentUpperBound);
    detail += "upper bound diverges; ";
  }
  if (scan.bounds.lower_collapse || scan.bounds.m_sq < opts.min_lower_bound_sq) {
    failed.push_back(Hypothesis::LowerBoundCollapse);
    detail += "lower bound collapses (mSq = " + std::to_string(scan.bounds.m_sq) + "); ";
  }
  if (!failed.empty()) {
    detail.resize(detail.size() - 2);
    throw HypothesisFailed(failed, detail);
  }

  GramLimit lim = detail::limit_from_scan(t, scan, opts.tol, opts.limit);
  if (!lim.converged)
    throw HypothesisFailed({Hypothesis::GramNotConverged},
                           "fixed-point residual " + std::to_string(lim.fixed_point_residual));
  return detail::certify(t, lim, SimilarityKind::Isometry, opts.tol);
}

struct ExpansiveOptions {
  double tol = 1e-9;
  GrowthPolicy growth{};
};

struct ExpansiveCertificate {
  SimilarityCertificate certificate;
  /// max over n of -lambda_min(A_{n+1} - A_n) / lambda_max(A_{n+1}), clipped at 0.
  double worst_monotonicity_defect = 0.0;
  bool monotone = true;
  /// ||T* A T - A|| for the returned A.
  double invariance_residual = 0.0;
};

/// Limit of the increasing sequence A_n = (1/(n+1)) sum_{j<=n} T*^j T^j for
/// expansive T (T*T >= I); T is an isometry for <A x, x>.
inline ExpansiveCertificate expansive_isometrize(const ComplexMatrix& t, std::int64_t n_max,
                                                 const ExpansiveOptions& opts = {}) {
  require_square(t, "operator");
  if (n_max < 2) throw Error(ErrorCode::InvalidArgument, "nMax must be at least 2");
  double lo = spectral_range(congruence(t, identity(t.rows()))).min;
  if (lo < 1.0 - 1e-10)
    throw Error(ErrorCode::NotExpansive, "lambda_min(T*T) = " + std::to_string(lo) + " < 1");

  ExpansiveCertificate out;
  GrowthMonitor upper(opts.growth);
  CesaroState state(t);
  state.advance();  // A_1 in the 1/(n+1) indexing is the two-term average.
  BoundsEstimate& b = out.certificate.bounds;
  b.m_sq = std::numeric_limits<double>::infinity();
  for (std::int64_t n = 1;; ++n) {
    SpectralRange r = spectral_range(state.average());
    b.m_sq = std::min(b.m_sq, r.min);
    b.M_sq = std::max(b.M_sq, r.max);
    upper.observe(n, r.max);
    b.n_max = n;
    if (upper.capped() || n >= n_max) break;
    CesaroState next = state.advanced();
    double step = spectral_range(next.average() - state.average()).min;
    double defect = std::max(0.0, -step / spectral_range(next.average()).max);
    out.worst_monotonicity_defect = std::max(out.worst_monotonicity_defect, defect);
    if (defect > 1e-12) out.monotone = false;
    state = std::move(next);
  }
  b.divergent = upper.divergent();
  b.upper_growth_ratio = upper.last_ratio();
  if (b.divergent)
    throw Error(ErrorCode::Diverged, "averages of T*^j T^j are unbounded (lambda_max = " +
                                         std::to_string(b.M_sq) + ")");

  const ComplexMatrix& a = state.average();
  out.invariance_residual = detail::fixed_point_residual(t, a);
  if (!(out.invariance_residual <= opts.tol))
    throw Error(ErrorCode::NotConverged, "||T*AT - A|| = " + std::to_string(out.invariance_residual));
  if (spectral_range(a).min < 1.0 - 1e-10) throw Error(ErrorCode::NotConverged, "limit is not >= I");
  GramLimit lim{HermitianMatrix::from_trusted(a), true, 1, out.invariance_residual, b};
  out.certificate = detail::certify(t, lim, SimilarityKind::Isometry, opts.tol);
  return out;
}

/// B_N = (1/(2N+1)) sum_{n=-N}^{N} T*^n T^n, negative powers through T^{-1}.
inline HermitianMatrix symmetric_average(const ComplexMatrix& t, std::int64_t n) {
  require_square(t, "operator");
  ComplexMatrix t_inv = checked_inverse(t);
  ComplexMatrix id = identity(t.rows());
  ComplexMatrix sum = id;
  ComplexMatrix fwd = id;
  ComplexMatrix bwd = id;
  for (std::int64_t k = 1; k <= n; ++k) {
    fwd = congruence(t, fwd);
    bwd = congruence(t_inv, bwd);
    sum += fwd + bwd;
  }
  return HermitianMatrix::from_trusted(sum / static_cast<double>(2 * n + 1));
}

struct SzNagyOptions {
  double tol = 1e-8;
  GrowthPolicy growth{};
  LimitOptions limit{};
};

/// Similarity to a unitary for invertible T with T and T^{-1} power-bounded,
/// via the symmetric averages B_N.
inline SimilarityCertificate sznagy_unitarize(const ComplexMatrix& t, std::int64_t n_max,
                                              const SzNagyOptions& opts = {}) {
  require_square(t, "operator");
  if (n_max < 8) throw Error(ErrorCode::InvalidArgument, "nMax must be at least 8");
  ComplexMatrix t_inv = checked_inverse(t);
  ComplexMatrix id = identity(t.rows());

  CesaroState forward(t);
  CesaroState backward(t_inv);
  GrowthMonitor fwd_growth(opts.growth);
  GrowthMonitor bwd_growth(opts.growth);
  ComplexMatrix sum = id;
  BoundsEstimate b;
  b.m_sq = 1.0;
  b.M_sq = 1.0;
  std::int64_t n = 0;
  while (n < n_max) {
    sum += forward.power_gram() + backward.power_gram();
    forward.advance();
    backward.advance();
    ++n;
    SpectralRange r = spectral_range(sum / static_cast<double>(2 * n + 1));
    b.m_sq = std::min(b.m_sq, r.min);
    b.M_sq = std::max(b.M_sq, r.max);
    fwd_growth.observe(forward.n(), spectral_range(forward.average()).max);
    bwd_growth.observe(backward.n(), spectral_range(backward.average()).max);
    if (fwd_growth.capped() || bwd_growth.capped()) break;
  }
  b.n_max = n;
  if (fwd_growth.divergent()) throw PowerUnbounded(PowerDirection::Forward, "averages of T*^n T^n diverge");
  if (bwd_growth.divergent()) throw PowerUnbounded(PowerDirection::Backward, "averages of T^-n* T^-n diverge");

  ComplexMatrix first = sum / static_cast<double>(2 * n + 1);
  // Passes average over a forward and a backward dyadic window of the same
  // length, so both directions enter symmetrically.
  int levels = floor_log2(std::max<std::int64_t>(n, 1));
  std::vector<ComplexMatrix> fwd_powers = dyadic_powers(t, levels);
  std::vector<ComplexMatrix> bwd_powers = dyadic_powers(t_inv, levels);
  auto pass = [&](const ComplexMatrix& x) { return dyadic_average(fwd_powers, dyadic_average(bwd_powers, x)); };
  auto residual = [&](const ComplexMatrix& x) { return detail::fixed_point_residual(t, x); };
  LimitResult lim = iterated_average_limit(first, pass, residual, opts.tol, opts.limit);
  if (!lim.converged)
    throw HypothesisFailed({Hypothesis::GramNotConverged},
                           "fixed-point residual " + std::to_string(lim.fixed_point_residual));
  GramLimit gl{HermitianMatrix::from_trusted(lim.gram), true, lim.order, lim.fixed_point_residual, b};
  gl.bounds.include_limit(gl.gram.matrix());
  return detail::certify(t, gl, SimilarityKind::Unitary, opts.tol);
}

/// max over N in [nMax/2, nMax] of ||T^N||^2 / N; tends to 0 for
/// absolutely Cesàro bounded T. May return +inf when powers overflow.
inline double decay_check(const ComplexMatrix& t, std::int64_t n_max) {
  require_square(t, "operator");
  if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "nMax must be positive");
  ComplexMatrix q = identity(t.rows());
  double log_scale = 0.0;
  double worst = 0.0;
  std::int64_t tail_start = std::max<std::int64_t>(1, n_max / 2);
  for (std::int64_t n = 1; n <= n_max; ++n) {
    q = q * t;
    double fro = q.norm();
    if (fro == 0.0) return worst;
    if (fro > 1e100 || fro < 1e-100) {
      q /= fro;
      log_scale += std::log(fro);
    }
    if (n >= tail_start) {
      double log_norm = std::log(op_norm(q)) + log_scale;
      worst = std::max(worst, std::exp(2.0 * log_norm) / static_cast<double>(n));
    }
  }
  return worst;
}

}  // namespace isometrize
