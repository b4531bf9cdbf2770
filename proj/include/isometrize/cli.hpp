#pragma once

// Command dispatch behind the isometrize executable. Each command builds a
// Report; the exit code follows the report status (0 ok, 2 hypothesis
// failure, 1 error).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "isometrize/cesaro.hpp"
#include "isometrize/derivations.hpp"
#include "isometrize/folner.hpp"
#include "isometrize/io.hpp"
#include "isometrize/random.hpp"
#include "isometrize/rep_unitarize.hpp"
#include "isometrize/report.hpp"

namespace isometrize {

enum class Command { AnalyzeOperator, UnitarizeRep, IsometrizeSemigroup, FolnerReport, DerivationReport };
enum class OutputFormat { Text, Csv, Json };

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::AnalyzeOperator: return "analyze-operator";
    case Command::UnitarizeRep: return "unitarize-rep";
    case Command::IsometrizeSemigroup: return "isometrize-semigroup";
    case Command::FolnerReport: return "folner-report";
    case Command::DerivationReport: return "derivation-report";
  }
  return "?";
}

struct RunConfig {
  Command command = Command::AnalyzeOperator;
  std::string input_path;
  /// Unset: 4096-scale horizon for operators, 64 for Følner scans, 16 for derivations.
  std::optional<std::int64_t> n_max;
  double tol = 1e-8;
  std::optional<double> decay_tol;
  std::optional<std::string> output_path;
  OutputFormat format = OutputFormat::Text;
  std::string group;
  std::int64_t p = 2;
  std::optional<double> kappa;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_max && *n_max < 4) throw Error(ErrorCode::InvalidArgument, "--nmax must be at least 4");
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "--tol must be positive");
    if (decay_tol && !(*decay_tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "--decay-tol must be >= 0");
    if (p < 1) throw Error(ErrorCode::InvalidArgument, "--p must be positive");
    if (kappa && !(*kappa >= 1.0)) throw Error(ErrorCode::InvalidArgument, "--kappa must be >= 1");
  }
};

namespace detail {

inline void add_matrix(CertificateSummary& c, std::string name, ComplexMatrix m) {
  c.matrices.push_back({std::move(name), std::move(m)});
}

inline void cesaro_table(Report& r, const ComplexMatrix& t, std::int64_t n_max) {
  CesaroState state(t);
  for (;;) {
    std::int64_t n = state.n();
    if (is_power_of_two(n) || n == n_max) {
      SpectralRange s = spectral_range(state.average());
      r.row(n, "lambda_min", s.min);
      r.row(n, "lambda_max", s.max);
      if (!std::isfinite(s.max) || s.max > GrowthPolicy{}.hard_cap) break;
    }
    if (n >= n_max) break;
    state.advance();
  }
}

inline Report analyze_operator(const RunConfig& cfg) {
  Report r;
  ComplexMatrix t = parse_matrix_file(cfg.input_path);
  require_square(t, "operator");
  CesaroOptions opts;
  opts.n_max = cfg.n_max.value_or(default_horizon(t.rows()));
  opts.tol = cfg.tol;
  cesaro_table(r, t, opts.n_max);
  EigenCheck eig = eigen_unimodular_check(t, opts.eigen_tol);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (Complex z : eig.eigenvalues) {
    lo = std::min(lo, std::abs(z));
    hi = std::max(hi, std::abs(z));
  }
  r.add("eigen_modulus_min", lo);
  r.add("eigen_modulus_max", hi);
  BoundsEstimate b = estimate_bounds(t, opts.n_max, opts.growth);
  r.add("n_max", static_cast<double>(b.n_max));
  r.add("m_sq", b.m_sq);
  r.add("M_sq", b.M_sq);
  r.add("divergent", b.divergent ? 1.0 : 0.0);
  r.add("lower_collapse", b.lower_collapse ? 1.0 : 0.0);
  r.add("decay_stat", b.decay_stat);
  r.add("upper_growth_ratio", b.upper_growth_ratio);

  SimilarityCertificate cert = isometrize(t, opts);
  CertificateSummary c;
  c.kind = std::string(to_string(cert.kind));
  c.residual = cert.residual;
  c.tolerance = cfg.tol;
  add_matrix(c, "D", cert.transform);
  add_matrix(c, "D T D^-1", cert.conjugated);
  add_matrix(c, "F", cert.gram);
  c.values = {{"condition_number", cert.condition_number},
              {"m_sq", cert.bounds.m_sq},
              {"M_sq", cert.bounds.M_sq},
              {"averaging_order", static_cast<double>(cert.averaging_order)},
              {"gram_fixed_point_residual", cert.gram_fixed_point_residual}};
  r.certificate = std::move(c);
  r.status = ReportStatus::Certified;
  return r;
}

inline RepOptions rep_options(const RunConfig& cfg) {
  RepOptions o;
  o.n_max = cfg.n_max.value_or(64);
  o.tol = cfg.tol;
  o.decay_tol = cfg.decay_tol;
  return o;
}

inline void scan_rows(Report& r, const BoundScan& s) {
  for (const BoundScanRow& row : s.rows) {
    r.row(row.n, "gram_min", row.gram_min);
    r.row(row.n, "gram_max", row.gram_max);
    r.row(row.n, "adjoint_max", row.adjoint_max);
  }
  r.add("c_est", s.c_est);
  r.add("m_est", s.m_est);
  r.add("M_est", s.M_est);
  r.add("divergent", s.divergent ? 1.0 : 0.0);
  r.add("lower_collapse", s.lower_collapse ? 1.0 : 0.0);
  r.add("lower_bound_ok", s.lower_bound_ok ? 1.0 : 0.0);
}

inline CertificateSummary rep_summary(const RepCertificate& cert, double tol) {
  CertificateSummary c;
  c.kind = std::string(to_string(cert.kind));
  c.residual = cert.max_residual();
  c.tolerance = tol;
  add_matrix(c, "L", cert.transform);
  for (const auto& [name, m] : cert.conjugated) add_matrix(c, "L pi(" + name + ") L^-1", m);
  add_matrix(c, "F", cert.gram);
  for (const auto& [name, v] : cert.residuals) c.values.push_back({"residual:" + name, v});
  c.values.push_back({"condition_number", cert.condition_number});
  c.values.push_back({"constant_bound", cert.constant_bound});
  c.values.push_back({"constant_ok", cert.constant_ok ? 1.0 : 0.0});
  c.values.push_back({"c_est", cert.c_est});
  c.values.push_back({"m_est", cert.m_est});
  c.values.push_back({"M_est", cert.M_est});
  c.values.push_back({"averaging_order", static_cast<double>(cert.averaging_order)});
  c.values.push_back({"gram_fixed_point_residual", cert.gram_fixed_point_residual});
  return c;
}

inline Report rep_command(const RunConfig& cfg, bool semigroup) {
  Report r;
  RepresentationFile file = parse_representation_file(cfg.input_path, cfg.seed);
  const Representation& rep = file.rep;
  if (rep.descriptor().is_group() == semigroup)
    throw Error(ErrorCode::NotApplicable,
                rep.descriptor().name() + (semigroup ? " is a group; use unitarize-rep"
                                                     : " is a semigroup; use isometrize-semigroup"));
  FolnerFamily family(rep.descriptor());
  RepOptions opts = rep_options(cfg);
  scan_rows(r, bound_scan(rep, family, opts.n_max, opts.growth));
  RepCertificate cert = semigroup ? isometrize_semigroup_rep(rep, family, opts) : unitarize_rep(rep, family, opts);
  for (const DecayEntry& e : cert.decay_report) {
    for (const auto& [n, v] : e.values) r.row(n, "decay:" + e.word, v);
    r.add("decay_tolerance:" + e.word, e.tolerance);
  }
  r.certificate = rep_summary(cert, cfg.tol);
  r.message = "uniform bound is evidence from N <= " + std::to_string(opts.n_max) + ", not a proof";
  r.status = ReportStatus::Certified;
  return r;
}

inline Report folner_report(const RunConfig& cfg) {
  Report r;
  if (cfg.group.empty()) throw Error(ErrorCode::InvalidArgument, "folner-report needs --group");
  FolnerFamily family(parse_group(cfg.group, std::filesystem::current_path(), cfg.seed));
  const GroupDescriptor& d = family.descriptor();
  const std::int64_t n_max = cfg.n_max.value_or(64);
  // Without an explicit --nmax, stop before sets get expensive.
  const double budget = cfg.n_max ? static_cast<double>(kMaxSetSize) : 2e6;
  const double product_budget = 4e6;
  bool doubling_ok = true;
  double worst_doubling = 0.0;
  std::int64_t reached = 0;
  // An explicit horizon past the cap is rejected before any enumeration.
  if (cfg.n_max && family.size_bound(n_max) > budget) family.set_at(n_max);
  for (std::int64_t n = 1; n <= n_max; ++n) {
    if (family.size_bound(n) > budget) {
      if (cfg.n_max) family.set_at(n);  // raises SetTooLarge
      break;
    }
    std::vector<Element> set = family.set_at(n);
    ElementSet lookup = to_set(set);
    for (const Generator& g : d.generators()) {
      TranslationCounts c = translation_counts(d, set, lookup, g.element);
      double size = static_cast<double>(c.set_size);
      r.row(n, g.name, static_cast<double>(c.symmetric_difference()) / size);
      r.row(n, "sfc:" + g.name, static_cast<double>(c.missing) / size);
      r.row(n, "fc:" + g.name, static_cast<double>(c.extra) / size);
    }
    if (d.is_group()) {
      r.row(n, "symmetric", symmetry_check(family, n) ? 1.0 : 0.0);
      double sq = static_cast<double>(set.size()) * static_cast<double>(set.size());
      if (sq <= product_budget) {
        r.row(n, "tempelman", tempelman_ratio(family, n));
        if (family.size_bound(cfg.p * n) <= budget) {
          DoublingResult dr = doubling_check(family, n, cfg.p);
          r.row(n, "doubling_subset", dr.subset_ok ? 1.0 : 0.0);
          r.row(n, "doubling_ratio", dr.ratio);
          doubling_ok = doubling_ok && dr.subset_ok && (!cfg.kappa || dr.ratio <= *cfg.kappa);
          worst_doubling = std::max(worst_doubling, dr.ratio);
        }
      }
    }
    r.row(n, "size", static_cast<double>(set.size()));
    reached = n;
  }
  r.add("n_max_reached", static_cast<double>(reached));
  r.add("p", static_cast<double>(cfg.p));
  if (d.is_group()) r.add("worst_doubling_ratio", worst_doubling);
  if (d.is_group() && cfg.kappa) {
    r.add("kappa", *cfg.kappa);
    r.add("doubling_ok", doubling_ok ? 1.0 : 0.0);
  }
  r.status = ReportStatus::Completed;
  return r;
}

inline Report derivation_report(const RunConfig& cfg) {
  Report r;
  RepresentationFile file = parse_representation_file(cfg.input_path, cfg.seed);
  if (!file.derivation) throw Error(ErrorCode::SchemaError, "$.derivation is missing");
  DerivationMap d(file.rep, *file.derivation);
  FolnerFamily family(d.rep().descriptor());
  LeibnizResult lb = leibniz_check(d, 256, cfg.seed);
  r.add("leibniz_worst", lb.worst);
  r.add("leibniz_ok", lb.ok ? 1.0 : 0.0);
  if (!lb.ok) throw Error(ErrorCode::LeibnizFailed, "Leibniz defect " + std::to_string(lb.worst));
  InnerOptions opts;
  opts.n_max = cfg.n_max.value_or(16);
  opts.tol = cfg.tol;
  opts.rep.n_max = opts.n_max;
  opts.rep.decay_tol = cfg.decay_tol;
  DerivationScan scan = derivation_bound_scan(d, family, opts.n_max);
  for (const auto& [n, v] : scan.rows) r.row(n, "derivation_c_sq", v);
  r.add("c_est", scan.c_est);
  r.add("divergent", scan.divergent ? 1.0 : 0.0);
  InnernessCertificate cert = extract_inner(d, family, opts);
  CertificateSummary c;
  c.kind = "inner";
  c.residual = cert.residual;
  c.tolerance = cfg.tol;
  add_matrix(c, "T", cert.t);
  c.values.push_back({"method_least_squares", cert.method == InnerMethod::LeastSquares ? 1.0 : 0.0});
  if (cert.corroboration) {
    const Corroboration& co = *cert.corroboration;
    c.values.push_back({"corroboration_ok", co.ok ? 1.0 : 0.0});
    c.values.push_back({"reconstruction_residual", co.reconstruction_residual});
    if (co.certificate) {
      c.values.push_back({"pi_D_residual", co.certificate->max_residual()});
      c.values.push_back({"pi_D_condition_number", co.certificate->condition_number});
      add_matrix(c, "T (from pi_D)", co.t_reconstructed);
    }
    if (!co.failure.empty()) r.message = "corroboration: " + co.failure;
  }
  r.certificate = std::move(c);
  r.status = ReportStatus::Certified;
  return r;
}

}  // namespace detail

/// Runs one command; never throws.
inline Report execute(const RunConfig& cfg) {
  Report r;
  try {
    cfg.validate();
    switch (cfg.command) {
      case Command::AnalyzeOperator: r = detail::analyze_operator(cfg); break;
      case Command::UnitarizeRep: r = detail::rep_command(cfg, false); break;
      case Command::IsometrizeSemigroup: r = detail::rep_command(cfg, true); break;
      case Command::FolnerReport: r = detail::folner_report(cfg); break;
      case Command::DerivationReport: r = detail::derivation_report(cfg); break;
    }
  } catch (const HypothesisFailed& e) {
    r.status = ReportStatus::HypothesisFailed;
    r.message = e.what();
    r.certificate.reset();
    for (Hypothesis h : e.which()) r.reasons.emplace_back(to_string(h));
  } catch (const Error& e) {
    r.status = is_hypothesis_failure(e.code()) ? ReportStatus::HypothesisFailed : ReportStatus::Error;
    r.message = e.what();
    r.certificate.reset();
    r.reasons.emplace_back(to_string(e.code()));
  } catch (const std::exception& e) {
    r.status = ReportStatus::Error;
    r.message = e.what();
    r.certificate.reset();
    r.reasons.emplace_back("internal");
  }
  r.command = std::string(to_string(cfg.command));
  return r;
}

inline std::string render(const Report& r, OutputFormat format) {
  switch (format) {
    case OutputFormat::Json: return report_to_json(r).dump(2) + "\n";
    case OutputFormat::Csv: return report_to_csv(r);
    case OutputFormat::Text: return report_to_text(r);
  }
  return report_to_text(r);
}

/// Executes, writes the report to the configured destination and returns the exit code.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Report r = execute(cfg);
  std::string text = render(r, cfg.format);
  if (cfg.output_path) {
    std::ofstream file(*cfg.output_path, std::ios::binary);
    if (!file) {
      err << "cannot write " << *cfg.output_path << "\n";
      return 1;
    }
    file << text;
  } else {
    out << text;
  }
  if (r.status == ReportStatus::Error || r.status == ReportStatus::HypothesisFailed) err << r.message << "\n";
  return exit_code(r.status);
}

}  // namespace isometrize
