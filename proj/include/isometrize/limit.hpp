#pragma once

// Shared policy for the two asymptotic questions every averaging path asks:
// does the averaged Gram sequence blow up (or collapse), and what is its
// limit. The limit is computed by repeatedly applying a fixed Følner
// averaging operator X -> avg_g pi(g)* X pi(g) starting from the plain
// average. Every fixed point of the action is fixed by the operator, and
// the oscillating components shrink by a Dirichlet-kernel factor per pass,
// so the k-th pass is a k-th order (Fejér-type) average whose limit is the
// same Banach-limit value as the plain Cesàro mean.

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "isometrize/operator_core.hpp"

namespace isometrize {

struct GrowthPolicy {
  /// A dyadic step counts as growth when value(2N)/value(N) >= ratio.
  double ratio = 1.5;
  /// Number of consecutive growing dyadic steps that declare divergence.
  int consecutive = 2;
  /// Smallest N whose doubling step is considered.
  std::int64_t min_dyadic = 16;
  /// Any value above this is divergent outright.
  double hard_cap = 1e12;
};

inline bool is_power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

/// Watches a positive sequence indexed by N = 1, 2, ... and flags sustained
/// growth over dyadic windows.
class GrowthMonitor {
 public:
  explicit GrowthMonitor(GrowthPolicy policy = {}) : policy_(policy) {}

  void observe(std::int64_t n, double value) {
    if (!std::isfinite(value) || value > policy_.hard_cap) {
      divergent_ = true;
      capped_ = true;
      return;
    }
    if (!is_power_of_two(n)) return;
    if (previous_n_ > 0 && previous_n_ * 2 == n && previous_n_ >= policy_.min_dyadic) {
      if (previous_ > 0.0)
        last_ratio_ = value / previous_;
      else
        last_ratio_ = value > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
      streak_ = last_ratio_ >= policy_.ratio ? streak_ + 1 : 0;
      if (streak_ >= policy_.consecutive) divergent_ = true;
    }
    previous_n_ = n;
    previous_ = value;
  }

  bool divergent() const noexcept { return divergent_; }
  /// True once the hard cap tripped; callers stop iterating.
  bool capped() const noexcept { return capped_; }
  /// value(2N)/value(N) at the most recent dyadic step (0 if none yet).
  double last_ratio() const noexcept { return last_ratio_; }

 private:
  GrowthPolicy policy_;
  std::int64_t previous_n_ = 0;
  double previous_ = 0.0;
  double last_ratio_ = 0.0;
  int streak_ = 0;
  bool divergent_ = false;
  bool capped_ = false;
};

/// Dyadic policy scaled to short horizons (Følner scans run to N = 64 or less).
inline GrowthPolicy scaled_policy(GrowthPolicy base, std::int64_t n_max) {
  std::int64_t quarter = n_max / 4;
  base.min_dyadic = std::min<std::int64_t>(base.min_dyadic, std::max<std::int64_t>(1, quarter));
  return base;
}

/// floor(log2(n)) for n >= 1.
inline int floor_log2(std::int64_t n) {
  int k = 0;
  while (n > 1) {
    n >>= 1;
    ++k;
  }
  return k;
}

/// M, M^2, M^4, ..., M^(2^(levels-1)).
inline std::vector<ComplexMatrix> dyadic_powers(const ComplexMatrix& m, int levels) {
  std::vector<ComplexMatrix> out;
  out.reserve(static_cast<std::size_t>(levels));
  ComplexMatrix p = m;
  for (int i = 0; i < levels; ++i) {
    out.push_back(p);
    if (i + 1 < levels) p = p * p;
  }
  return out;
}

/// X -> 2^-k sum_{n < 2^k} M*^n X M^n, evaluated as prod_i (X + M_i* X M_i)/2
/// with M_i = M^(2^i). Costs k congruences instead of 2^k.
inline ComplexMatrix dyadic_average(const std::vector<ComplexMatrix>& powers, ComplexMatrix x) {
  for (const ComplexMatrix& p : powers) x = 0.5 * (x + congruence(p, x));
  return x;
}

struct LimitOptions {
  int max_passes = 400;
  /// Stop once the fixed-point residual is below floor * max(1, ||X||).
  double floor = 1e-15;
  /// Stop when no new best residual appeared within this many passes.
  int stall_window = 4;
};

struct LimitResult {
  ComplexMatrix gram;
  /// Number of averaging passes applied (1 = the plain average).
  int order = 1;
  double fixed_point_residual = 0.0;
  bool converged = false;
};

/// `average(X)` applies one Følner averaging pass; `residual(X)` measures
/// how far X is from being invariant (max over generators of
/// ||pi(s)* X pi(s) - X||). Convergence means residual <= tol * max(1, ||X||).
template <class Average, class Residual>
LimitResult iterated_average_limit(ComplexMatrix first, Average&& average, Residual&& residual, double tol,
                                   const LimitOptions& opts = {}) {
  LimitResult best{first, 1, residual(first), false};
  ComplexMatrix x = std::move(first);
  int order = 1;
  int since_best = 0;
  auto done = [&](const LimitResult& r) {
    return r.fixed_point_residual <= opts.floor * std::max(1.0, op_norm(r.gram));
  };
  while (!done(best) && order < opts.max_passes && since_best < opts.stall_window) {
    ComplexMatrix next = average(x);
    x = 0.5 * (next + next.adjoint());
    ++order;
    double r = residual(x);
    if (r < best.fixed_point_residual) {
      best = {x, order, r, false};
      since_best = 0;
    } else {
      ++since_best;
    }
  }
  best.converged = best.fixed_point_residual <= tol * std::max(1.0, op_norm(best.gram));
  return best;
}

}  // namespace isometrize
