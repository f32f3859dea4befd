#pragma once

#include <stdexcept>
#include <string>

namespace stackelberg {

enum class ErrorKind {
  NonPositiveWeight,
  NegativeWeight,
  NonFinite,
  LengthMismatch,
  OutOfRange,
  RiccatiBlowUp,
  H3Violated,
  M1NotInvertible,
  M2NotInvertible,
  NonFiniteState,
  Parse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorKind::NegativeWeight: return "NegativeWeight";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::RiccatiBlowUp: return "RiccatiBlowUp";
    case ErrorKind::H3Violated: return "H3Violated";
    case ErrorKind::M1NotInvertible: return "M1NotInvertible";
    case ErrorKind::M2NotInvertible: return "M2NotInvertible";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it onto an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Solver failures that happen at a definite time on the grid.
class SolverError : public Error {
 public:
  SolverError(ErrorKind kind, double time, const std::string& what)
      : Error(kind, what + " at t=" + std::to_string(time)), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace stackelberg
