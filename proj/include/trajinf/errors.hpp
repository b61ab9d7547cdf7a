#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace trajinf {

enum class ErrorKind {
  BadInput,
  NonStabilizable,
  NoConvergence,
  Unstable,
  SingularOperator,
  EigenFailure,
  EmptyDataset,
  NumericalFailure,
  SingularSystem,
  IndexOutOfRange,
  AssumptionViolated,
  NonFinite,
  DegenerateInput,
  IdMismatch,
  UnknownFamily,
  Config,
  Data,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure carries its kind and the pipeline stage that raised it, so the
// CLI can map it to an exit code and print "<stage>: <message>".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message),
        kind_(kind),
        stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorKind kind_;
  std::string stage_;
};

// Process exit codes used by the command-line tool.
// 2 config, 3 data, 4 numerics, 5 assumption violated.
int exit_code_for(ErrorKind kind);

}  // namespace trajinf
