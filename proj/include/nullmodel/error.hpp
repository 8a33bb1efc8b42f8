#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nullmodel {

enum class ErrorKind {
  SelfLoop,
  MalformedLine,
  EmptyGraph,
  Io,
  DomainError,
  IsolatedNode,
  CapExceeded,
  MleDiverged,
  LineSearchFailed,
  NotConverged,
  BoundaryEscape,
  InfeasibleTarget,
  InvalidArgument,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SelfLoop: return "SelfLoop";
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::EmptyGraph: return "EmptyGraph";
    case ErrorKind::Io: return "Io";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::IsolatedNode: return "IsolatedNode";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::MleDiverged: return "MleDiverged";
    case ErrorKind::LineSearchFailed: return "LineSearchFailed";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::BoundaryEscape: return "BoundaryEscape";
    case ErrorKind::InfeasibleTarget: return "InfeasibleTarget";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace nullmodel
