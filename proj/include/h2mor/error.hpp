#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace h2mor {

enum class ErrorCode {
  InvalidArgument,
  NotStable,
  SingularSystem,
  NoUniqueSolution,
  SingularShift,
  GenerationFailed,
  IoError,
  FormatError,
  RankDeficientData,
  AssumptionViolated,
  SingularAhat,
  InsufficientData,
  SingularE,
  StabilizationFailed,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (notably the CLI) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace h2mor
