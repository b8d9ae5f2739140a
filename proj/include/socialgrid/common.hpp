#pragma once

#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace socialgrid {

inline constexpr double kBtuPerKwh = 3412.14;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double fahrenheit_to_celsius(double f) { return (f - 32.0) * 5.0 / 9.0; }
inline double btu_to_kwh(double btu) { return btu / kBtuPerKwh; }
inline double kwh_to_btu(double kwh) { return kwh * kBtuPerKwh; }
inline double kw_to_mw(double kw) { return kw / 1000.0; }
inline double mw_to_kw(double mw) { return mw * 1000.0; }

enum class ErrorCode {
  // network construction / validation
  DisconnectedGraph,
  DanglingReference,
  NonPositiveReactance,
  InvalidNetwork,
  // linear algebra / LP
  SingularSusceptanceMatrix,
  Infeasible,
  Unbounded,
  SolverFailure,
  // building models
  OutOfBracket,
  DomainViolation,
  MissingHour,
  NegativeOccupancy,
  InvalidProfile,
  // pricing / game / marl
  MissingHistory,
  GridTooLarge,
  InvalidSimplex,
  InvalidConfig,
  IoError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::NonPositiveReactance: return "NonPositiveReactance";
    case ErrorCode::InvalidNetwork: return "InvalidNetwork";
    case ErrorCode::SingularSusceptanceMatrix: return "SingularSusceptanceMatrix";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::OutOfBracket: return "OutOfBracket";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::MissingHour: return "MissingHour";
    case ErrorCode::NegativeOccupancy: return "NegativeOccupancy";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::MissingHistory: return "MissingHistory";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::InvalidSimplex: return "InvalidSimplex";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Carries every violation found while validating an input, not just the first.
class ValidationError : public Error {
 public:
  ValidationError(ErrorCode code, std::vector<std::string> violations)
      : Error(code, join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::ostringstream os;
    os << v.size() << " violation(s)";
    for (const auto& s : v) os << "\n  - " << s;
    return os.str();
  }
  std::vector<std::string> violations_;
};

// Non-fatal diagnostics (e.g. model extrapolation) go to stderr.
inline void warn(const std::string& msg) { std::cerr << "[socialgrid] warning: " << msg << "\n"; }

}  // namespace socialgrid
