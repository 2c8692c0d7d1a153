#pragma once

#include <stdexcept>
#include <string>

namespace dictcs {

enum class ErrorKind {
  InvalidInput,
  NoPositiveSingularValue,
  DegenerateColumn,
  CombinatorialBudgetExceeded,
  DegenerateSignal,
  InconsistentRepresentation,
  NotFullSpark,
  ExactModeUnavailable,
  NoSolution,
  PremiseFailed,
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NoPositiveSingularValue: return "NoPositiveSingularValue";
    case ErrorKind::DegenerateColumn: return "DegenerateColumn";
    case ErrorKind::CombinatorialBudgetExceeded: return "CombinatorialBudgetExceeded";
    case ErrorKind::DegenerateSignal: return "DegenerateSignal";
    case ErrorKind::InconsistentRepresentation: return "InconsistentRepresentation";
    case ErrorKind::NotFullSpark: return "NotFullSpark";
    case ErrorKind::ExactModeUnavailable: return "ExactModeUnavailable";
    case ErrorKind::NoSolution: return "NoSolution";
    case ErrorKind::PremiseFailed: return "PremiseFailed";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(ErrorKind::InvalidInput, msg);
}

}  // namespace dictcs
