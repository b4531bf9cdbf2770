#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace isometrize {

enum class ErrorCode {
  NotHermitian,
  NotPSD,
  NotSquare,
  Singular,
  DimensionMismatch,
  NotApplicable,
  SetTooLarge,
  OutOfDomain,
  Diverged,
  NotExpansive,
  NotConverged,
  PowerUnbounded,
  DoublingFailed,
  LeibnizFailed,
  NotInnerAtTolerance,
  HypothesisFailed,
  ParseError,
  SchemaError,
  NonFinite,
  InvalidArgument,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::SetTooLarge: return "SetTooLarge";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::NotExpansive: return "NotExpansive";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::PowerUnbounded: return "PowerUnbounded";
    case ErrorCode::DoublingFailed: return "DoublingFailed";
    case ErrorCode::LeibnizFailed: return "LeibnizFailed";
    case ErrorCode::NotInnerAtTolerance: return "NotInnerAtTolerance";
    case ErrorCode::HypothesisFailed: return "HypothesisFailed";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Errors that mean "the input does not satisfy a similarity hypothesis"
/// rather than "the computation broke". The CLI maps these to exit code 2.
inline bool is_hypothesis_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::Diverged:
    case ErrorCode::NotExpansive:
    case ErrorCode::NotConverged:
    case ErrorCode::PowerUnbounded:
    case ErrorCode::DoublingFailed:
    case ErrorCode::LeibnizFailed:
    case ErrorCode::NotInnerAtTolerance:
    case ErrorCode::HypothesisFailed:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Which hypothesis of a similarity theorem was found violated.
enum class Hypothesis {
  DivergentUpperBound,
  LowerBoundCollapse,
  EigenvalueModulus,
  GramNotConverged,
  SingularTransform,
  BoundC,
  Decay,
};

inline std::string_view to_string(Hypothesis h) {
  switch (h) {
    case Hypothesis::DivergentUpperBound: return "divergent_upper_bound";
    case Hypothesis::LowerBoundCollapse: return "lower_bound_collapse";
    case Hypothesis::EigenvalueModulus: return "eigenvalue_modulus";
    case Hypothesis::GramNotConverged: return "gram_not_converged";
    case Hypothesis::SingularTransform: return "singular_transform";
    case Hypothesis::BoundC: return "bound_c";
    case Hypothesis::Decay: return "decay";
  }
  return "unknown";
}

class HypothesisFailed : public Error {
 public:
  HypothesisFailed(std::vector<Hypothesis> which, const std::string& detail)
      : Error(ErrorCode::HypothesisFailed, describe(which) + detail), which_(std::move(which)) {}

  /// All violated hypotheses, most fundamental first.
  const std::vector<Hypothesis>& which() const noexcept { return which_; }

  bool contains(Hypothesis h) const {
    for (auto w : which_)
      if (w == h) return true;
    return false;
  }

 private:
  static std::string describe(const std::vector<Hypothesis>& which) {
    std::string out;
    for (auto w : which) {
      if (!out.empty()) out += ",";
      out += to_string(w);
    }
    return out + (out.empty() ? "" : ": ");
  }

  std::vector<Hypothesis> which_;
};

enum class PowerDirection { Forward, Backward };

class PowerUnbounded : public Error {
 public:
  PowerUnbounded(PowerDirection direction, const std::string& detail)
      : Error(ErrorCode::PowerUnbounded,
              std::string(direction == PowerDirection::Forward ? "forward: " : "backward: ") + detail),
        direction_(direction) {}

  PowerDirection direction() const noexcept { return direction_; }

 private:
  PowerDirection direction_;
};

}  // namespace isometrize
