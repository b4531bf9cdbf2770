#pragma once

// Følner-averaged unitarization of group representations and
// isometrization of semigroup representations. All averages are finite
// sums over the explicit Følner sets.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "isometrize/cesaro.hpp"
#include "isometrize/folner.hpp"
#include "isometrize/limit.hpp"
#include "isometrize/representation.hpp"

namespace isometrize {

struct FolnerGram {
  std::int64_t n = 0;
  std::size_t size = 0;
  HermitianMatrix gram;          // avg pi(g)* pi(g)
  HermitianMatrix adjoint_gram;  // avg pi(g) pi(g)*
};

inline FolnerGram folner_gram_pair(const Representation& rep, const FolnerFamily& family, std::int64_t n) {
  std::vector<Element> set = family.set_at(n);
  RepEvaluator eval(rep);
  ComplexMatrix g = ComplexMatrix::Zero(rep.dim(), rep.dim());
  ComplexMatrix a = g;
  for (const Element& e : set) {
    ComplexMatrix p = eval(e);
    g += p.adjoint() * p;
    a += p * p.adjoint();
  }
  double size = static_cast<double>(set.size());
  return {n, set.size(), HermitianMatrix::from_trusted(g / size), HermitianMatrix::from_trusted(a / size)};
}

namespace detail {

/// Calls visit(N, |F_N|, gram_N, adjoint_gram_N) for N = 1..n_max, reusing
/// the previous sums when F_{N-1} ⊆ F_N. Stops when visit returns false.
template <class Visit>
void nested_gram_sums(const Representation& rep, const FolnerFamily& family, std::int64_t n_max, Visit&& visit) {
  RepEvaluator eval(rep);
  ElementSet included;
  ComplexMatrix g = ComplexMatrix::Zero(rep.dim(), rep.dim());
  ComplexMatrix a = g;
  auto add = [&](const Element& e) {
    ComplexMatrix p = eval(e);
    g += p.adjoint() * p;
    a += p * p.adjoint();
  };
  for (std::int64_t n = 1; n <= n_max; ++n) {
    std::vector<Element> set = family.set_at(n);
    for (const Element& e : set)
      if (included.insert(e).second) add(e);
    if (included.size() != set.size()) {
      included = to_set(set);
      g.setZero();
      a.setZero();
      for (const Element& e : set) add(e);
    }
    double size = static_cast<double>(set.size());
    if (!visit(n, set.size(), ComplexMatrix(g / size), ComplexMatrix(a / size))) return;
  }
}

}  // namespace detail

struct BoundScanRow {
  std::int64_t n = 0;
  double gram_min = 0.0;
  double gram_max = 0.0;
  double adjoint_max = 0.0;
};

struct BoundScan {
  double c_est = 0.0;
  double m_est = 0.0;
  double M_est = 0.0;
  bool divergent = false;
  bool lower_collapse = false;
  /// lambda_min(gram_N) >= (1 - 1e-9) / c_est^2 at every scanned N (groups only).
  bool lower_bound_ok = true;
  /// sqrt(max_N 1 / lambda_min(gram_N)); any constant satisfying the
  /// adjoint bound is at least this large.
  double c_lower = 0.0;
  std::int64_t n_max = 0;
  std::vector<BoundScanRow> rows;
  ComplexMatrix last_gram;
};

inline BoundScan bound_scan(const Representation& rep, const FolnerFamily& family, std::int64_t n_max,
                            const GrowthPolicy& growth = {}) {
  if (n_max < 4) throw Error(ErrorCode::InvalidArgument, "nMax must be at least 4");
  if (!(rep.descriptor() == family.descriptor()))
    throw Error(ErrorCode::DimensionMismatch, "representation and Følner family use different groups");
  const bool group = rep.descriptor().is_group();
  GrowthPolicy policy = scaled_policy(growth, n_max);
  GrowthMonitor upper(policy);
  GrowthMonitor adjoint(policy);
  GrowthMonitor lower(policy);
  BoundScan s;
  double c_sq = 0.0;
  double m_sq = std::numeric_limits<double>::infinity();
  double M_sq = 0.0;
  double inv_min = 0.0;
  detail::nested_gram_sums(rep, family, n_max,
                           [&](std::int64_t n, std::size_t, const ComplexMatrix& g, const ComplexMatrix& a) {
                             SpectralRange rg = spectral_range(g);
                             SpectralRange ra = spectral_range(a);
                             s.rows.push_back({n, rg.min, rg.max, ra.max});
                             c_sq = std::max({c_sq, rg.max, ra.max});
                             m_sq = std::min(m_sq, rg.min);
                             M_sq = std::max(M_sq, rg.max);
                             inv_min = std::max(inv_min, rg.min > 0.0 ? 1.0 / rg.min
                                                                      : std::numeric_limits<double>::infinity());
                             upper.observe(n, rg.max);
                             if (group) adjoint.observe(n, ra.max);
                             lower.observe(n, rg.min > 0.0 ? 1.0 / rg.min : std::numeric_limits<double>::infinity());
                             s.n_max = n;
                             s.last_gram = g;
                             return !(upper.capped() || adjoint.capped());
                           });
  s.c_est = std::sqrt(c_sq);
  s.m_est = std::sqrt(std::max(0.0, m_sq));
  s.M_est = std::sqrt(M_sq);
  s.c_lower = std::sqrt(inv_min);
  s.divergent = upper.divergent() || adjoint.divergent();
  s.lower_collapse = lower.divergent();
  if (group) {
    double floor = (1.0 - 1e-9) / c_sq;
    for (const BoundScanRow& r : s.rows)
      if (r.gram_min < floor) s.lower_bound_ok = false;
  }
  return s;
}

/// N = 1, 2, 4, ... <= n_max, plus n_max itself.
inline std::vector<std::int64_t> dyadic_levels(std::int64_t n_max) {
  std::vector<std::int64_t> out;
  for (std::int64_t n = 1; n <= n_max; n *= 2) out.push_back(n);
  if (out.empty() || out.back() != n_max) out.push_back(n_max);
  return out;
}

namespace detail {

/// Level sets and boundary norms shared by the decay evaluations of many words.
class SymdiffContext {
 public:
  SymdiffContext(const Representation& rep, const FolnerFamily& family, const std::vector<std::int64_t>& levels)
      : rep_(rep), eval_(rep) {
    for (std::int64_t n : levels) {
      std::vector<Element> set = family.set_at(n);
      ElementSet lookup = to_set(set);
      levels_.push_back({n, std::move(set), std::move(lookup)});
    }
  }

  /// Values per level; `last_ratio` receives |F s Δ F| / |F| at the last level.
  std::vector<std::pair<std::int64_t, double>> decay(const Element& s, double* last_ratio = nullptr) {
    const GroupDescriptor& d = rep_.descriptor();
    d.require_domain(s);
    std::vector<std::pair<std::int64_t, double>> out;
    for (const Level& level : levels_) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const Element& f : level.set) {
        Element g = d.multiply(f, s);
        if (!level.lookup.count(g)) {
          sum += norm_sq(g);
          ++count;
        }
        std::optional<Element> h = d.right_divide(f, s);
        if (!h || !level.lookup.count(*h)) {
          sum += norm_sq(f);
          ++count;
        }
      }
      double size = static_cast<double>(level.set.size());
      out.emplace_back(level.n, sum / size);
      if (last_ratio) *last_ratio = static_cast<double>(count) / size;
    }
    return out;
  }

 private:
  struct Level {
    std::int64_t n;
    std::vector<Element> set;
    ElementSet lookup;
  };

  double norm_sq(const Element& g) {
    auto it = norms_.find(g);
    if (it != norms_.end()) return it->second;
    double v = op_norm(eval_(g));
    v *= v;
    norms_.emplace(g, v);
    return v;
  }

  const Representation& rep_;
  RepEvaluator eval_;
  std::vector<Level> levels_;
  std::unordered_map<Element, double, ElementHash> norms_;
};

}  // namespace detail

/// (1/|F_N|) * sum over F_N s Δ F_N of ||pi(g)||^2, for each N in levels.
inline std::vector<std::pair<std::int64_t, double>> symdiff_decay(const Representation& rep,
                                                                  const FolnerFamily& family, const Element& s,
                                                                  const std::vector<std::int64_t>& levels) {
  detail::SymdiffContext ctx(rep, family, levels);
  return ctx.decay(s);
}

struct DecayEntry {
  std::string word;
  Element element;
  std::vector<std::pair<std::int64_t, double>> values;
  double tolerance = 0.0;
  bool ok = false;
};

struct RepOptions {
  std::int64_t n_max = 64;
  double tol = 1e-8;
  /// Absolute threshold on the last decay value. When unset, each word s
  /// gets bound^2 * |F s Δ F| / |F| at the last level, where bound is the
  /// uniform norm bound implied by the scanned constants (C^2 for groups,
  /// M/m for semigroups).
  std::optional<double> decay_tol;
  int decay_word_length = 4;
  /// Each limit pass averages over 2^levels powers of every generator.
  int averaging_levels = 12;
  GrowthPolicy growth{};
  LimitOptions limit{};
};

struct RepCertificate {
  SimilarityKind kind = SimilarityKind::Unitary;
  /// L = F^{1/2}; the conjugated images are L pi(s) L^{-1}.
  ComplexMatrix transform;
  std::vector<std::pair<std::string, ComplexMatrix>> conjugated;
  std::vector<std::pair<std::string, double>> residuals;
  double condition_number = 0.0;
  /// Group case: C. Semigroup case: m and M.
  double c_est = 0.0;
  double m_est = 0.0;
  double M_est = 0.0;
  /// C^2 (group) or M/m (semigroup), and whether cond(L) respects it.
  double constant_bound = 0.0;
  bool constant_ok = false;
  std::vector<DecayEntry> decay_report;
  ComplexMatrix gram;
  int averaging_order = 1;
  double gram_fixed_point_residual = 0.0;
  BoundScan scan;

  double max_residual() const {
    double r = 0.0;
    for (const auto& [name, v] : residuals) r = std::max(r, v);
    return r;
  }
};

namespace detail {

inline std::string word_label(const GroupDescriptor& d, const Element& e) { return d.to_string(e); }

inline std::vector<DecayEntry> decay_report(const Representation& rep, const FolnerFamily& family,
                                            std::int64_t n_max, double bound, const RepOptions& opts) {
  const GroupDescriptor& d = rep.descriptor();
  std::vector<std::int64_t> levels = dyadic_levels(n_max);
  std::vector<Element> words = short_words(d, opts.decay_word_length);
  SymdiffContext ctx(rep, family, levels);
  std::vector<DecayEntry> out;
  for (const Element& w : words) {
    if (w == d.identity()) continue;
    DecayEntry e;
    e.word = word_label(d, w);
    e.element = w;
    double ratio = 0.0;
    e.values = ctx.decay(w, &ratio);
    double last = e.values.back().second;
    e.tolerance = opts.decay_tol ? *opts.decay_tol : bound * bound * ratio * (1.0 + 1e-6);
    e.ok = last <= e.tolerance;
    out.push_back(std::move(e));
  }
  return out;
}

inline double invariance_residual(const Representation& rep, const ComplexMatrix& x) {
  double r = 0.0;
  for (std::size_t i = 0; i < rep.generator_count(); ++i) {
    const ComplexMatrix& p = rep.image(i);
    r = std::max(r, op_norm(p.adjoint() * x * p - x));
  }
  return r;
}

inline LimitResult rep_limit(const Representation& rep, const ComplexMatrix& start, const RepOptions& opts) {
  const GroupDescriptor& d = rep.descriptor();
  auto residual = [&](const ComplexMatrix& x) { return invariance_residual(rep, x); };
  if (d.family() == GroupFamily::FiniteGroupTable) {
    auto pass = [&](const ComplexMatrix& x) {
      ComplexMatrix acc = ComplexMatrix::Zero(x.rows(), x.cols());
      for (std::size_t i = 0; i < rep.generator_count(); ++i) acc += congruence(rep.image(i), x);
      return ComplexMatrix(acc / static_cast<double>(rep.generator_count()));
    };
    return iterated_average_limit(start, pass, residual, opts.tol, opts.limit);
  }
  std::vector<std::vector<ComplexMatrix>> windows;
  for (std::size_t i = 0; i < rep.generator_count(); ++i) {
    windows.push_back(dyadic_powers(rep.image(i), opts.averaging_levels));
    if (d.is_group()) windows.push_back(dyadic_powers(rep.inverse_image(i), opts.averaging_levels));
  }
  auto pass = [&](const ComplexMatrix& x) {
    ComplexMatrix y = x;
    for (const auto& w : windows) y = dyadic_average(w, y);
    return y;
  };
  return iterated_average_limit(start, pass, residual, opts.tol, opts.limit);
}

inline RepCertificate certify_rep(const Representation& rep, const LimitResult& lim, SimilarityKind kind,
                                  double tol) {
  RepCertificate c;
  c.kind = kind;
  c.gram = lim.gram;
  c.averaging_order = lim.order;
  c.gram_fixed_point_residual = lim.fixed_point_residual;
  HermitianMatrix f = HermitianMatrix::from_trusted(lim.gram);
  HermitianMatrix l = herm_sqrt(f);
  try {
    c.condition_number = condition_number(l.matrix());
  } catch (const Error&) {
    throw HypothesisFailed({Hypothesis::SingularTransform}, "limit Gram matrix is singular");
  }
  c.transform = l.matrix();
  ComplexMatrix l_inv = l.matrix().inverse();
  for (std::size_t i = 0; i < rep.generator_count(); ++i) {
    ComplexMatrix v = l.matrix() * rep.image(i) * l_inv;
    double r = kind == SimilarityKind::Unitary ? unitary_residual(v) : isometry_residual(v);
    c.conjugated.emplace_back(rep.generator_name(i), v);
    c.residuals.emplace_back(rep.generator_name(i), r);
  }
  if (!(c.max_residual() <= tol))
    throw HypothesisFailed({Hypothesis::GramNotConverged},
                           "conjugated generators miss the target by " + std::to_string(c.max_residual()));
  return c;
}

}  // namespace detail

/// Group case: similarity to a unitary representation.
inline RepCertificate unitarize_rep(const Representation& rep, const FolnerFamily& family,
                                    const RepOptions& opts = {}) {
  if (!rep.descriptor().is_group())
    throw Error(ErrorCode::NotApplicable, rep.descriptor().name() + " is a semigroup; use the isometric path");
  BoundScan scan = bound_scan(rep, family, opts.n_max, opts.growth);
  if (scan.divergent)
    throw HypothesisFailed({Hypothesis::BoundC}, "Følner averages of pi(g)*pi(g) grow without bound");
  double c_eff = std::max(scan.c_est, scan.c_lower);
  std::vector<DecayEntry> decay = detail::decay_report(rep, family, scan.n_max, c_eff * c_eff, opts);
  for (const DecayEntry& e : decay)
    if (!e.ok)
      throw HypothesisFailed({Hypothesis::Decay}, "boundary mass for word " + e.word + " is " +
                                                      std::to_string(e.values.back().second));
  LimitResult lim = detail::rep_limit(rep, scan.last_gram, opts);
  if (!lim.converged)
    throw HypothesisFailed({Hypothesis::GramNotConverged},
                           "fixed-point residual " + std::to_string(lim.fixed_point_residual));
  RepCertificate c = detail::certify_rep(rep, lim, SimilarityKind::Unitary, opts.tol);
  SpectralRange fr = spectral_range(c.gram);
  c.c_est = std::max(scan.c_est, std::sqrt(fr.max));
  c.m_est = scan.m_est;
  c.M_est = scan.M_est;
  c.constant_bound = c.c_est * c.c_est;
  c.constant_ok = c.condition_number <= c.constant_bound * (1.0 + 1e-6);
  c.decay_report = std::move(decay);
  c.scan = std::move(scan);
  return c;
}

/// Semigroup case (right Følner sets): similarity to an isometric representation.
inline RepCertificate isometrize_semigroup_rep(const Representation& rep, const FolnerFamily& family,
                                               const RepOptions& opts = {}) {
  if (rep.descriptor().is_group())
    throw Error(ErrorCode::NotApplicable, rep.descriptor().name() + " is a group; use unitarize_rep");
  BoundScan scan = bound_scan(rep, family, opts.n_max, opts.growth);
  if (scan.divergent)
    throw HypothesisFailed({Hypothesis::BoundC}, "Følner averages of pi(g)*pi(g) grow without bound");
  if (scan.lower_collapse || !(scan.m_est > 0.0))
    throw HypothesisFailed({Hypothesis::LowerBoundCollapse}, "Følner averages of pi(g)*pi(g) lose rank");
  std::vector<DecayEntry> decay = detail::decay_report(rep, family, scan.n_max, scan.M_est / scan.m_est, opts);
  for (const DecayEntry& e : decay)
    if (!e.ok)
      throw HypothesisFailed({Hypothesis::Decay}, "boundary mass for word " + e.word + " is " +
                                                      std::to_string(e.values.back().second));
  LimitResult lim = detail::rep_limit(rep, scan.last_gram, opts);
  if (!lim.converged)
    throw HypothesisFailed({Hypothesis::GramNotConverged},
                           "fixed-point residual " + std::to_string(lim.fixed_point_residual));
  RepCertificate c = detail::certify_rep(rep, lim, SimilarityKind::Isometry, opts.tol);
  SpectralRange fr = spectral_range(c.gram);
  c.m_est = std::sqrt(std::max(0.0, std::min(scan.m_est * scan.m_est, fr.min)));
  c.M_est = std::sqrt(std::max(scan.M_est * scan.M_est, fr.max));
  c.c_est = scan.c_est;
  c.constant_bound = c.M_est / c.m_est;
  c.constant_ok = c.condition_number <= c.constant_bound * (1.0 + 1e-6);
  c.decay_report = std::move(decay);
  c.scan = std::move(scan);
  return c;
}

struct UniformBound {
  bool holds = false;
  double worst_norm = 0.0;          // max ||pi(k)|| over F_N
  double worst_inverse_norm = 0.0;  // max 1/sigma_min(pi(k)) over F_N
  double bound = 0.0;               // C^2 sqrt(kappa)
  DoublingResult doubling;
};

/// For k in F_N: sigma_min(pi(k)) >= 1/(C^2 sqrt(kappa)) and, for groups,
/// ||pi(k)|| <= C^2 sqrt(kappa). Requires the doubling pair (p, kappa).
inline UniformBound cert_uniform_bound(const Representation& rep, const FolnerFamily& family, std::int64_t p,
                                       double kappa, double c_est, std::int64_t n) {
  UniformBound u;
  u.doubling = doubling_check(family, n, p);
  if (!u.doubling.subset_ok)
    throw Error(ErrorCode::DoublingFailed, "F_N F_N^-1 is not contained in F_pN");
  if (u.doubling.ratio > kappa)
    throw Error(ErrorCode::DoublingFailed, "|F_pN|/|F_N| = " + std::to_string(u.doubling.ratio) + " exceeds kappa");
  u.bound = c_est * c_est * std::sqrt(kappa);
  RepEvaluator eval(rep);
  bool ok = true;
  for (const Element& k : family.set_at(n)) {
    Eigen::JacobiSVD<ComplexMatrix> svd(eval(k));
    const RealVector& sv = svd.singularValues();
    double hi = sv(0);
    double lo = sv(sv.size() - 1);
    u.worst_norm = std::max(u.worst_norm, hi);
    u.worst_inverse_norm = std::max(u.worst_inverse_norm, lo > 0.0 ? 1.0 / lo : std::numeric_limits<double>::infinity());
    if (lo < (1.0 - 1e-9) / u.bound) ok = false;
    if (rep.descriptor().is_group() && hi > u.bound * (1.0 + 1e-9)) ok = false;
  }
  u.holds = ok;
  return u;
}

/// As above with the constant taken from a bound scan. A divergent scan has
/// no uniform constant, so the bound cannot hold.
inline UniformBound cert_uniform_bound(const Representation& rep, const FolnerFamily& family, std::int64_t p,
                                       double kappa, const BoundScan& scan, std::int64_t n) {
  UniformBound u = cert_uniform_bound(rep, family, p, kappa, scan.c_est, n);
  if (scan.divergent) u.holds = false;
  return u;
}

struct TranslatedBound {
  double c_est = 0.0;
  bool uniform_ok = false;
  bool divergent = false;
  /// (N, running max of C^2 over samples and levels <= N)
  std::vector<std::pair<std::int64_t, double>> rows;
};

/// Averages over translated Følner sets F_N g. Right translation is
/// injective here, so the average over F_N g equals pi(g)* gram_N pi(g).
inline TranslatedBound translated_bound_check(const Representation& rep, const FolnerFamily& family,
                                              const std::vector<Element>& samples, std::int64_t n_max,
                                              const GrowthPolicy& growth = {}) {
  if (n_max < 2) throw Error(ErrorCode::InvalidArgument, "nMax must be at least 2");
  RepEvaluator eval(rep);
  std::vector<ComplexMatrix> images;
  for (const Element& g : samples) images.push_back(eval(g));
  GrowthMonitor monitor(scaled_policy(growth, n_max));
  TranslatedBound t;
  double running = 0.0;
  detail::nested_gram_sums(rep, family, n_max,
                           [&](std::int64_t n, std::size_t, const ComplexMatrix& g, const ComplexMatrix&) {
                             for (const ComplexMatrix& p : images)
                               running = std::max(running, spectral_range(congruence(p, g)).max);
                             t.rows.emplace_back(n, running);
                             monitor.observe(n, running);
                             return !monitor.capped();
                           });
  t.c_est = std::sqrt(running);
  t.divergent = monitor.divergent();
  std::int64_t last = t.rows.back().first;
  std::int64_t half = std::int64_t{1} << floor_log2(std::max<std::int64_t>(1, last / 2));
  double at_half = t.rows[static_cast<std::size_t>(half - 1)].second;
  t.uniform_ok = !t.divergent && last == n_max && running <= 1.05 * at_half;
  return t;
}

inline TranslatedBound translated_bound_check(const Representation& rep, const FolnerFamily& family,
                                              std::int64_t n_max) {
  return translated_bound_check(rep, family, short_words(rep.descriptor(), 3), n_max);
}

}  // namespace isometrize
