#pragma once

// Derivations D(gh) = D(g) pi(h) + pi(g) D(h) over unitary representations.
// D is carried by the block representation pi_D(g) = [[pi(g), D(g)], [0, pi(g)]]:
// the upper right block of pi_D(g) is the Leibniz extension of D to g.

#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "isometrize/random.hpp"
#include "isometrize/rep_unitarize.hpp"

namespace isometrize {

class DerivationMap {
 public:
  DerivationMap(Representation rep, std::map<std::string, ComplexMatrix> images, double unitary_tol = 1e-10)
      : rep_(std::move(rep)) {
    for (std::size_t i = 0; i < rep_.generator_count(); ++i) {
      double r = unitary_residual(rep_.image(i));
      if (r > unitary_tol)
        throw Error(ErrorCode::InvalidArgument, "derivations need a unitary representation; generator " +
                                                    rep_.generator_name(i) + " is off by " + std::to_string(r));
    }
    if (images.size() != rep_.generator_count())
      throw Error(ErrorCode::SchemaError, "expected " + std::to_string(rep_.generator_count()) +
                                              " derivation images, got " + std::to_string(images.size()));
    for (std::size_t i = 0; i < rep_.generator_count(); ++i) {
      auto it = images.find(rep_.generator_name(i));
      if (it == images.end())
        throw Error(ErrorCode::SchemaError, "missing derivation image for " + rep_.generator_name(i));
      if (it->second.rows() != rep_.dim() || it->second.cols() != rep_.dim())
        throw Error(ErrorCode::DimensionMismatch, "derivation image of " + rep_.generator_name(i) +
                                                      " has the wrong shape");
      if (!all_finite(it->second))
        throw Error(ErrorCode::NonFinite, "derivation image of " + rep_.generator_name(i) + " is not finite");
      images_.push_back(it->second);
    }
  }

  const Representation& rep() const noexcept { return rep_; }
  Eigen::Index dim() const noexcept { return rep_.dim(); }
  const ComplexMatrix& image(std::size_t i) const { return images_[i]; }

  std::map<std::string, ComplexMatrix> images_by_name() const {
    std::map<std::string, ComplexMatrix> out;
    for (std::size_t i = 0; i < images_.size(); ++i) out.emplace(rep_.generator_name(i), images_[i]);
    return out;
  }

  double max_image_norm() const {
    double m = 0.0;
    for (const ComplexMatrix& d : images_) m = std::max(m, op_norm(d));
    return m;
  }

  /// [[pi(s), D(s)], [0, pi(s)]] per generator.
  std::map<std::string, ComplexMatrix> block_images() const {
    const Eigen::Index n = dim();
    std::map<std::string, ComplexMatrix> out;
    for (std::size_t i = 0; i < images_.size(); ++i) {
      ComplexMatrix b = ComplexMatrix::Zero(2 * n, 2 * n);
      b.topLeftCorner(n, n) = rep_.image(i);
      b.topRightCorner(n, n) = images_[i];
      b.bottomRightCorner(n, n) = rep_.image(i);
      out.emplace(rep_.generator_name(i), b);
    }
    return out;
  }

 private:
  Representation rep_;
  std::vector<ComplexMatrix> images_;
};

/// Evaluates (pi(g), D(g)) through the normal form of the block representation.
class DerivationEvaluator {
 public:
  explicit DerivationEvaluator(const DerivationMap& d)
      : n_(d.dim()), block_(Representation::unchecked(d.rep().descriptor(), d.block_images())), eval_(block_) {}

  DerivationEvaluator(const DerivationEvaluator&) = delete;
  DerivationEvaluator& operator=(const DerivationEvaluator&) = delete;

  struct Value {
    ComplexMatrix pi;
    ComplexMatrix d;
  };

  Value operator()(const Element& g) {
    ComplexMatrix b = eval_(g);
    return {b.topLeftCorner(n_, n_), b.topRightCorner(n_, n_)};
  }

 private:
  Eigen::Index n_;
  Representation block_;
  RepEvaluator eval_;
};

struct LeibnizResult {
  bool ok = false;
  double worst = 0.0;
};

/// Leibniz defect ||D(gh) - D(g)pi(h) - pi(g)D(h)|| on random pairs of
/// words of length <= 3.
inline LeibnizResult leibniz_check(const DerivationMap& d, std::size_t samples, std::uint64_t seed = seed_from_env()) {
  const GroupDescriptor& g = d.rep().descriptor();
  std::vector<Element> words = short_words(g, 3);
  DerivationEvaluator eval(d);
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  LeibnizResult r;
  for (std::size_t k = 0; k < samples; ++k) {
    const Element& a = words[pick(rng)];
    const Element& b = words[pick(rng)];
    auto va = eval(a);
    auto vb = eval(b);
    auto vab = eval(g.multiply(a, b));
    r.worst = std::max(r.worst, op_norm(vab.d - va.d * vb.pi - va.pi * vb.d));
  }
  r.ok = r.worst <= 1e-8 * (1.0 + d.max_image_norm());
  return r;
}

inline Representation build_pi_D(const DerivationMap& d, std::size_t samples = 256,
                                 std::uint64_t seed = seed_from_env()) {
  LeibnizResult l = leibniz_check(d, samples, seed);
  if (!l.ok) throw Error(ErrorCode::LeibnizFailed, "Leibniz defect " + std::to_string(l.worst));
  return Representation(d.rep().descriptor(), d.block_images(), {}, RepTolerances{1e-8, 1e-10});
}

struct DerivationScan {
  double c_est = 0.0;
  bool divergent = false;
  /// (N, running max over samples and levels <= N of avg_{h in F_N g} ||D(h)||^2)
  std::vector<std::pair<std::int64_t, double>> rows;
};

/// Translated Følner averages of ||D(h)||^2 over g in `samples`. Uses
/// D(kg) = D(k)pi(g) + pi(k)D(g) so each F_N element is evaluated once.
inline DerivationScan derivation_bound_scan(const DerivationMap& d, const FolnerFamily& family, std::int64_t n_max,
                                            const std::vector<Element>& samples, const GrowthPolicy& growth = {}) {
  if (n_max < 2) throw Error(ErrorCode::InvalidArgument, "nMax must be at least 2");
  DerivationEvaluator eval(d);
  std::vector<DerivationEvaluator::Value> shifts;
  for (const Element& g : samples) shifts.push_back(eval(g));
  std::vector<double> sums(samples.size(), 0.0);
  ElementSet included;
  GrowthMonitor monitor(scaled_policy(growth, n_max));
  DerivationScan s;
  double running = 0.0;
  auto add = [&](const Element& k) {
    auto vk = eval(k);
    for (std::size_t j = 0; j < shifts.size(); ++j) {
      double v = op_norm(vk.d * shifts[j].pi + vk.pi * shifts[j].d);
      sums[j] += v * v;
    }
  };
  for (std::int64_t n = 1; n <= n_max; ++n) {
    std::vector<Element> set = family.set_at(n);
    for (const Element& k : set)
      if (included.insert(k).second) add(k);
    if (included.size() != set.size()) {
      included = to_set(set);
      std::fill(sums.begin(), sums.end(), 0.0);
      for (const Element& k : set) add(k);
    }
    for (double v : sums) running = std::max(running, v / static_cast<double>(set.size()));
    s.rows.emplace_back(n, running);
    monitor.observe(n, running);
    if (monitor.capped()) break;
  }
  s.c_est = std::sqrt(running);
  s.divergent = monitor.divergent();
  return s;
}

inline DerivationScan derivation_bound_scan(const DerivationMap& d, const FolnerFamily& family, std::int64_t n_max) {
  return derivation_bound_scan(d, family, n_max, short_words(d.rep().descriptor(), 3));
}

enum class InnerMethod { LeastSquares, ViaUnitarization };

inline std::string_view to_string(InnerMethod m) {
  return m == InnerMethod::LeastSquares ? "least_squares" : "via_unitarization";
}

/// max_s ||D(s) - (pi(s)T - T pi(s))||
inline double inner_residual(const DerivationMap& d, const ComplexMatrix& t) {
  double r = 0.0;
  for (std::size_t i = 0; i < d.rep().generator_count(); ++i) {
    const ComplexMatrix& p = d.rep().image(i);
    r = std::max(r, op_norm(d.image(i) - (p * t - t * p)));
  }
  return r;
}

struct Corroboration {
  bool ok = false;
  std::string failure;
  std::optional<RepCertificate> certificate;
  /// T read off the invariant Gram F of pi_D as F11^{-1} F12.
  ComplexMatrix t_reconstructed;
  double reconstruction_residual = std::numeric_limits<double>::infinity();
};

struct InnernessCertificate {
  ComplexMatrix t;
  double residual = 0.0;
  InnerMethod method = InnerMethod::LeastSquares;
  DerivationScan scan;
  std::optional<Corroboration> corroboration;
};

struct InnerOptions {
  std::int64_t n_max = 16;
  double tol = 1e-8;
  /// Relative rank threshold of the least-squares solve.
  double rank_threshold = 1e-10;
  bool corroborate = true;
  /// Acceptance threshold for the residual of the reconstructed T.
  double reconstruction_tol = 1e-6;
  /// Options for unitarizing pi_D; the horizon follows n_max by default.
  RepOptions rep = [] {
    RepOptions r;
    r.n_max = 16;
    return r;
  }();
};

/// Minimum-norm least-squares T with pi(s)T - T pi(s) = D(s) for every generator.
inline ComplexMatrix solve_inner(const DerivationMap& d, double rank_threshold = 1e-10) {
  const Eigen::Index n = d.dim();
  const Eigen::Index n2 = n * n;
  const std::size_t k = d.rep().generator_count();
  ComplexMatrix a(static_cast<Eigen::Index>(k) * n2, n2);
  ComplexVector b(static_cast<Eigen::Index>(k) * n2);
  ComplexMatrix id = identity(n);
  for (std::size_t i = 0; i < k; ++i) {
    const ComplexMatrix& p = d.rep().image(i);
    // Column-major vec: vec(PT - TP) = (I ⊗ P - P^T ⊗ I) vec(T).
    ComplexMatrix block(n2, n2);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c)
        block.block(r * n, c * n, n, n) = id(r, c) * p - p(c, r) * id;
    a.middleRows(static_cast<Eigen::Index>(i) * n2, n2) = block;
    b.segment(static_cast<Eigen::Index>(i) * n2, n2) = d.image(i).reshaped();
  }
  Eigen::CompleteOrthogonalDecomposition<ComplexMatrix> cod;
  cod.setThreshold(rank_threshold);
  cod.compute(a);
  ComplexVector x = cod.solve(b);
  return x.reshaped(n, n);
}

inline Corroboration corroborate_inner(const DerivationMap& d, const FolnerFamily& family, const InnerOptions& opts) {
  Corroboration c;
  const Eigen::Index n = d.dim();
  try {
    Representation pi_d = build_pi_D(d);
    RepCertificate cert = unitarize_rep(pi_d, family, opts.rep);
    const ComplexMatrix& f = cert.gram;
    c.t_reconstructed = checked_inverse(f.topLeftCorner(n, n)) * f.topRightCorner(n, n);
    c.reconstruction_residual = inner_residual(d, c.t_reconstructed);
    c.ok = c.reconstruction_residual <= opts.reconstruction_tol;
    c.certificate = std::move(cert);
  } catch (const HypothesisFailed& e) {
    c.failure = e.what();
  } catch (const Error& e) {
    c.failure = e.what();
  }
  return c;
}

inline InnernessCertificate extract_inner(const DerivationMap& d, const FolnerFamily& family,
                                          const InnerOptions& opts = {}) {
  InnernessCertificate cert;
  cert.scan = derivation_bound_scan(d, family, opts.n_max);
  if (cert.scan.divergent)
    throw HypothesisFailed({Hypothesis::BoundC}, "translated averages of ||D(h)||^2 grow without bound");
  cert.t = solve_inner(d, opts.rank_threshold);
  cert.residual = inner_residual(d, cert.t);
  if (!(cert.residual <= opts.tol))
    throw Error(ErrorCode::NotInnerAtTolerance,
                "least-squares residual " + std::to_string(cert.residual) + " exceeds " + std::to_string(opts.tol));
  if (opts.corroborate && d.rep().descriptor().is_group()) cert.corroboration = corroborate_inner(d, family, opts);
  return cert;
}

}  // namespace isometrize
