#pragma once

#include <stdexcept>
#include <string>

namespace tkit {

enum class ErrorCode {
  Parse,
  Io,
  SphereMismatch,
  ChainMismatch,
  NonSelfMap,
  AmbiguousMarking,
  Convention,
  NotStable,
  NotStandardForm,
  InadmissiblePairing,
  IncompatibleBoundaryDynamics,
  Domain,
  DegenerateConfiguration,
  BranchAmbiguity,
  Internal,
};

inline const char *to_string(ErrorCode code)
{
  switch (code) {
  case ErrorCode::Parse: return "ParseError";
  case ErrorCode::Io: return "IoError";
  case ErrorCode::SphereMismatch: return "SphereMismatch";
  case ErrorCode::ChainMismatch: return "ChainMismatch";
  case ErrorCode::NonSelfMap: return "NonSelfMap";
  case ErrorCode::AmbiguousMarking: return "AmbiguousMarking";
  case ErrorCode::Convention: return "ConventionError";
  case ErrorCode::NotStable: return "NotStable";
  case ErrorCode::NotStandardForm: return "NotStandardForm";
  case ErrorCode::InadmissiblePairing: return "InadmissiblePairing";
  case ErrorCode::IncompatibleBoundaryDynamics: return "IncompatibleBoundaryDynamics";
  case ErrorCode::Domain: return "DomainError";
  case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
  case ErrorCode::BranchAmbiguity: return "BranchAmbiguity";
  case ErrorCode::Internal: return "InternalError";
  }
  return "Unknown";
}

class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string &what)
  : std::runtime_error(std::string(to_string(code)) + ": " + what), _code(code)
  {}

  ErrorCode code() const noexcept { return _code; }

  // Parse and I/O failures are reported with exit code 2, everything else 1.
  bool is_io() const noexcept
  { return _code == ErrorCode::Parse || _code == ErrorCode::Io; }

private:
  ErrorCode _code;
};

} // namespace tkit
