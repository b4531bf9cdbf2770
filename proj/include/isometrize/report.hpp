#pragma once

// Batch reports: JSON (round-trips bit-exactly), plain text, and CSV with
// columns N,item,value.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isometrize/io.hpp"

namespace isometrize {

/// Completed marks runs that produce tables without a certificate.
enum class ReportStatus { Certified, Completed, HypothesisFailed, Error };

inline std::string_view to_string(ReportStatus s) {
  switch (s) {
    case ReportStatus::Certified: return "Certified";
    case ReportStatus::Completed: return "Completed";
    case ReportStatus::HypothesisFailed: return "HypothesisFailed";
    case ReportStatus::Error: return "Error";
  }
  return "Error";
}

inline ReportStatus report_status_from_string(const std::string& s) {
  if (s == "Certified") return ReportStatus::Certified;
  if (s == "Completed") return ReportStatus::Completed;
  if (s == "HypothesisFailed") return ReportStatus::HypothesisFailed;
  if (s == "Error") return ReportStatus::Error;
  throw Error(ErrorCode::SchemaError, "unknown report status " + s);
}

inline int exit_code(ReportStatus s) {
  switch (s) {
    case ReportStatus::Certified:
    case ReportStatus::Completed: return 0;
    case ReportStatus::HypothesisFailed: return 2;
    case ReportStatus::Error: return 1;
  }
  return 1;
}

struct Diagnostic {
  std::string name;
  double value = 0.0;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

struct TableRow {
  std::int64_t n = 0;
  std::string item;
  double value = 0.0;

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

struct NamedMatrix {
  std::string name;
  ComplexMatrix matrix;
};

struct CertificateSummary {
  std::string kind;  // "isometry", "unitary", "inner"
  double residual = 0.0;
  double tolerance = 0.0;
  std::vector<NamedMatrix> matrices;
  std::vector<Diagnostic> values;
};

struct Report {
  std::string command;
  ReportStatus status = ReportStatus::Error;
  std::string message;
  /// Machine-readable failure reasons (hypothesis names or error codes).
  std::vector<std::string> reasons;
  std::optional<CertificateSummary> certificate;
  std::vector<Diagnostic> diagnostics;
  std::vector<TableRow> table;

  void add(std::string name, double value) { diagnostics.push_back({std::move(name), value}); }
  void row(std::int64_t n, std::string item, double value) { table.push_back({n, std::move(item), value}); }
};

namespace detail {

/// JSON has no NaN/Inf; those travel as strings.
inline json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double number_from_json(const json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw Error(ErrorCode::SchemaError, field + " must be a number");
}

inline json diagnostics_to_json(const std::vector<Diagnostic>& ds) {
  json out = json::array();
  for (const Diagnostic& d : ds) out.push_back({{"name", d.name}, {"value", number_to_json(d.value)}});
  return out;
}

inline std::vector<Diagnostic> diagnostics_from_json(const json& j, const std::string& field) {
  std::vector<Diagnostic> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& d = j.at(i);
    out.push_back({d.at("name").get<std::string>(),
                   number_from_json(d.at("value"), field + "[" + std::to_string(i) + "].value")});
  }
  return out;
}

inline std::string format_number(double v) {
  std::ostringstream ss;
  ss << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return ss.str();
}

inline std::string format_complex(Complex z) {
  std::ostringstream ss;
  ss << std::setprecision(10) << z.real();
  if (z.imag() != 0.0) ss << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return ss.str();
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline json report_to_json(const Report& r) {
  json j;
  j["command"] = r.command;
  j["status"] = std::string(to_string(r.status));
  j["message"] = r.message;
  j["reasons"] = r.reasons;
  if (r.certificate) {
    const CertificateSummary& c = *r.certificate;
    json cj;
    cj["kind"] = c.kind;
    cj["residual"] = detail::number_to_json(c.residual);
    cj["tolerance"] = detail::number_to_json(c.tolerance);
    json mats = json::array();
    for (const NamedMatrix& m : c.matrices) {
      json mj = matrix_to_json(m.matrix);
      for (auto& row : mj)
        for (auto& e : row) {
          e[0] = detail::number_to_json(e[0].get<double>());
          e[1] = detail::number_to_json(e[1].get<double>());
        }
      mats.push_back({{"name", m.name}, {"matrix", std::move(mj)}});
    }
    cj["matrices"] = std::move(mats);
    cj["values"] = detail::diagnostics_to_json(c.values);
    j["certificate"] = std::move(cj);
  } else {
    j["certificate"] = nullptr;
  }
  j["diagnostics"] = detail::diagnostics_to_json(r.diagnostics);
  json table = json::array();
  for (const TableRow& t : r.table) table.push_back({{"N", t.n}, {"item", t.item}, {"value", detail::number_to_json(t.value)}});
  j["table"] = std::move(table);
  return j;
}

inline Report report_from_json(const json& j) {
  try {
    Report r;
    r.command = j.at("command").get<std::string>();
    r.status = report_status_from_string(j.at("status").get<std::string>());
    r.message = j.at("message").get<std::string>();
    r.reasons = j.at("reasons").get<std::vector<std::string>>();
    if (!j.at("certificate").is_null()) {
      const json& cj = j.at("certificate");
      CertificateSummary c;
      c.kind = cj.at("kind").get<std::string>();
      c.residual = detail::number_from_json(cj.at("residual"), "certificate.residual");
      c.tolerance = detail::number_from_json(cj.at("tolerance"), "certificate.tolerance");
      for (const json& mj : cj.at("matrices")) {
        const json& rows = mj.at("matrix");
        ComplexMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.at(0).size()));
        for (std::size_t a = 0; a < rows.size(); ++a)
          for (std::size_t b = 0; b < rows[a].size(); ++b)
            m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                Complex(detail::number_from_json(rows[a][b][0], "matrix entry"),
                        detail::number_from_json(rows[a][b][1], "matrix entry"));
        c.matrices.push_back({mj.at("name").get<std::string>(), std::move(m)});
      }
      c.values = detail::diagnostics_from_json(cj.at("values"), "certificate.values");
      r.certificate = std::move(c);
    }
    r.diagnostics = detail::diagnostics_from_json(j.at("diagnostics"), "diagnostics");
    for (const json& t : j.at("table"))
      r.table.push_back({t.at("N").get<std::int64_t>(), t.at("item").get<std::string>(),
                         detail::number_from_json(t.at("value"), "table.value")});
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("report: ") + e.what());
  }
}

inline std::string report_to_text(const Report& r) {
  std::ostringstream out;
  out << r.command << ": " << to_string(r.status) << "\n";
  if (!r.message.empty()) out << "  " << r.message << "\n";
  for (const std::string& reason : r.reasons) out << "  reason: " << reason << "\n";
  if (r.certificate) {
    const CertificateSummary& c = *r.certificate;
    out << "certificate (" << c.kind << ")\n";
    out << "  residual   " << detail::format_number(c.residual) << "\n";
    out << "  tolerance  " << detail::format_number(c.tolerance) << "\n";
    for (const Diagnostic& d : c.values) out << "  " << d.name << "  " << detail::format_number(d.value) << "\n";
    for (const NamedMatrix& m : c.matrices) {
      out << "  " << m.name << " =\n";
      for (Eigen::Index i = 0; i < m.matrix.rows(); ++i) {
        out << "    [";
        for (Eigen::Index j = 0; j < m.matrix.cols(); ++j)
          out << (j ? ", " : "") << detail::format_complex(m.matrix(i, j));
        out << "]\n";
      }
    }
  }
  if (!r.diagnostics.empty()) {
    out << "diagnostics\n";
    for (const Diagnostic& d : r.diagnostics) out << "  " << d.name << "  " << detail::format_number(d.value) << "\n";
  }
  if (!r.table.empty()) {
    out << "table (N, item, value)\n";
    for (const TableRow& t : r.table)
      out << "  " << t.n << "  " << t.item << "  " << detail::format_number(t.value) << "\n";
  }
  return out.str();
}

/// Table rows first, then diagnostics and certificate scalars with an empty N.
inline std::string report_to_csv(const Report& r) {
  std::ostringstream out;
  out << "N,item,value\n";
  for (const TableRow& t : r.table)
    out << t.n << "," << detail::csv_field(t.item) << "," << detail::format_number(t.value) << "\n";
  out << ",status," << to_string(r.status) << "\n";
  for (const Diagnostic& d : r.diagnostics)
    out << "," << detail::csv_field(d.name) << "," << detail::format_number(d.value) << "\n";
  if (r.certificate) {
    out << ",residual," << detail::format_number(r.certificate->residual) << "\n";
    for (const Diagnostic& d : r.certificate->values)
      out << "," << detail::csv_field(d.name) << "," << detail::format_number(d.value) << "\n";
  }
  return out.str();
}

}  // namespace isometrize
