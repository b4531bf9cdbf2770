#pragma once

// JSON input files. Matrices are arrays of rows with [re, im] entries,
// optionally wrapped as {"rows": r, "cols": c, "data": [...]}.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "isometrize/derivations.hpp"
#include "isometrize/folner.hpp"
#include "isometrize/representation.hpp"

namespace isometrize {

using json = nlohmann::json;

namespace detail {

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline bool non_finite_token_at(const std::string& text, std::size_t offset) {
  // The parser reports the byte after the offending token; scan back to its start.
  std::size_t begin = std::min(offset, text.size());
  while (begin > 0 && (std::isalpha(static_cast<unsigned char>(text[begin - 1])) || text[begin - 1] == '-')) --begin;
  std::size_t end = begin;
  while (end < text.size() && (std::isalpha(static_cast<unsigned char>(text[end])) || text[end] == '-')) ++end;
  std::string token = text.substr(begin, end - begin);
  for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (!token.empty() && token[0] == '-') token.erase(0, 1);
  return token == "nan" || token == "inf" || token == "infinity";
}

}  // namespace detail

/// Parses JSON text; syntax errors carry line and column, bare NaN/Infinity
/// tokens are reported as NonFinite.
inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string where = source + ":" + std::to_string(line) + ":" + std::to_string(col);
    if (detail::non_finite_token_at(text, e.byte > 0 ? e.byte - 1 : 0))
      throw Error(ErrorCode::NonFinite, where + ": non-finite number");
    throw Error(ErrorCode::ParseError, where + ": " + e.what());
  }
}

inline json parse_json_file(const std::filesystem::path& path) {
  return parse_json_text(detail::read_text(path), path.string());
}

namespace detail {

inline double parse_component(const json& v, const std::string& field) {
  if (v.is_number()) {
    double x = v.get<double>();
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, field + " is not finite");
    return x;
  }
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) s.erase(0, 1);
    if (s == "nan" || s == "inf" || s == "infinity") throw Error(ErrorCode::NonFinite, field + " is not finite");
  }
  throw Error(ErrorCode::SchemaError, field + " must be a number");
}

inline Complex parse_entry(const json& v, const std::string& field) {
  if (v.is_number()) return {parse_component(v, field), 0.0};
  if (!v.is_array() || v.size() != 2) throw Error(ErrorCode::SchemaError, field + " must be [re, im]");
  return {parse_component(v[0], field + "[0]"), parse_component(v[1], field + "[1]")};
}

inline ComplexMatrix parse_rows(const json& rows, const std::string& field) {
  if (!rows.is_array() || rows.empty()) throw Error(ErrorCode::SchemaError, field + " must be a non-empty array of rows");
  const std::size_t r = rows.size();
  std::size_t c = 0;
  for (std::size_t i = 0; i < r; ++i) {
    const std::string rf = field + "[" + std::to_string(i) + "]";
    if (!rows[i].is_array() || rows[i].empty()) throw Error(ErrorCode::SchemaError, rf + " must be a non-empty array");
    if (i == 0) c = rows[i].size();
    if (rows[i].size() != c)
      throw Error(ErrorCode::SchemaError, rf + " has " + std::to_string(rows[i].size()) + " entries, expected " +
                                              std::to_string(c));
  }
  ComplexMatrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parse_entry(rows[i][j], field + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
  return m;
}

inline std::int64_t parse_positive(const json& obj, const std::string& key, const std::string& field) {
  if (!obj.contains(key)) throw Error(ErrorCode::SchemaError, field + "." + key + " is missing");
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
    throw Error(ErrorCode::SchemaError, field + "." + key + " must be a positive integer");
  return v.get<std::int64_t>();
}

}  // namespace detail

/// Either an array of rows or {"rows", "cols", "data"}.
inline ComplexMatrix parse_matrix_json(const json& j, const std::string& field = "$") {
  if (j.is_array()) return detail::parse_rows(j, field);
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, field + " must be a matrix object or array of rows");
  std::int64_t rows = detail::parse_positive(j, "rows", field);
  std::int64_t cols = detail::parse_positive(j, "cols", field);
  if (!j.contains("data")) throw Error(ErrorCode::SchemaError, field + ".data is missing");
  ComplexMatrix m = detail::parse_rows(j.at("data"), field + ".data");
  if (m.rows() != rows || m.cols() != cols)
    throw Error(ErrorCode::SchemaError, field + ".data is " + std::to_string(m.rows()) + "x" +
                                            std::to_string(m.cols()) + " but rows/cols say " + std::to_string(rows) +
                                            "x" + std::to_string(cols));
  return m;
}

inline ComplexMatrix parse_matrix_file(const std::filesystem::path& path) {
  return parse_matrix_json(parse_json_file(path));
}

/// [[re, im], ...] rows, the inverse of parse_rows.
inline json matrix_to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline GroupDescriptor parse_finite_table_file(const std::filesystem::path& path, std::uint64_t seed = 0) {
  json j = parse_json_file(path);
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, "$ must be an array of rows");
  std::vector<std::vector<std::int64_t>> table;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array()) throw Error(ErrorCode::SchemaError, "$[" + std::to_string(i) + "] must be an array");
    std::vector<std::int64_t> row;
    for (std::size_t k = 0; k < j[i].size(); ++k) {
      if (!j[i][k].is_number_integer())
        throw Error(ErrorCode::SchemaError,
                    "$[" + std::to_string(i) + "][" + std::to_string(k) + "] must be an integer index");
      row.push_back(j[i][k].get<std::int64_t>());
    }
    table.push_back(std::move(row));
  }
  return GroupDescriptor::finite_table(table, seed);
}

/// "Z^d", "N^d", "heisenberg3" or "finite:<file>" (relative to base_dir).
inline GroupDescriptor parse_group(const std::string& name, const std::filesystem::path& base_dir = {},
                                   std::uint64_t seed = 0) {
  if (auto g = parse_builtin_group(name)) return *g;
  const std::string prefix = "finite:";
  if (name.rfind(prefix, 0) == 0) {
    std::filesystem::path file = name.substr(prefix.size());
    if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
    return parse_finite_table_file(file, seed);
  }
  throw Error(ErrorCode::SchemaError, "unknown group " + name);
}

namespace detail {

inline std::map<std::string, ComplexMatrix> parse_matrix_map(const json& obj, const std::string& field,
                                                             std::int64_t dim) {
  if (!obj.is_object()) throw Error(ErrorCode::SchemaError, field + " must be an object");
  std::map<std::string, ComplexMatrix> out;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    std::string f = field + "." + it.key();
    ComplexMatrix m = parse_matrix_json(it.value(), f);
    if (m.rows() != dim || m.cols() != dim)
      throw Error(ErrorCode::SchemaError, f + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                              ", expected " + std::to_string(dim) + "x" + std::to_string(dim));
    out.emplace(it.key(), std::move(m));
  }
  return out;
}

}  // namespace detail

struct RepresentationFile {
  std::string group_name;
  Representation rep;
  std::optional<std::map<std::string, ComplexMatrix>> derivation;
};

inline RepresentationFile parse_representation_json(const json& j, const std::filesystem::path& base_dir = {},
                                                    std::uint64_t seed = 0) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "$ must be an object");
  if (!j.contains("group") || !j.at("group").is_string())
    throw Error(ErrorCode::SchemaError, "$.group must be a string");
  std::string group = j.at("group").get<std::string>();
  GroupDescriptor d = parse_group(group, base_dir, seed);
  std::int64_t dim = detail::parse_positive(j, "dim", "$");
  if (!j.contains("generators")) throw Error(ErrorCode::SchemaError, "$.generators is missing");
  auto images = detail::parse_matrix_map(j.at("generators"), "$.generators", dim);
  for (const auto& [name, m] : images) {
    bool known = false;
    for (const Generator& g : d.generators()) known = known || g.name == name;
    if (!known) throw Error(ErrorCode::SchemaError, "$.generators." + name + " is not a generator of " + d.name());
  }
  RepresentationFile out{group, Representation(std::move(d), std::move(images)), std::nullopt};
  if (j.contains("derivation")) out.derivation = detail::parse_matrix_map(j.at("derivation"), "$.derivation", dim);
  return out;
}

inline RepresentationFile parse_representation_file(const std::filesystem::path& path, std::uint64_t seed = 0) {
  return parse_representation_json(parse_json_file(path), path.parent_path(), seed);
}

}  // namespace isometrize
