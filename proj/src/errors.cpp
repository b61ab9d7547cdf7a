#include "trajinf/errors.hpp"

namespace trajinf {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadInput: return "BadInput";
    case ErrorKind::NonStabilizable: return "NonStabilizable";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::Unstable: return "Unstable";
    case ErrorKind::SingularOperator: return "SingularOperator";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::AssumptionViolated: return "AssumptionViolated";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::IdMismatch: return "IdMismatch";
    case ErrorKind::UnknownFamily: return "UnknownFamily";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Data: return "Data";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::UnknownFamily:
      return 2;
    case ErrorKind::Data:
    case ErrorKind::Io:
    case ErrorKind::IdMismatch:
    case ErrorKind::EmptyDataset:
    case ErrorKind::BadInput:
    case ErrorKind::IndexOutOfRange:
      return 3;
    case ErrorKind::AssumptionViolated:
    case ErrorKind::NonStabilizable:
      return 5;
    default:
      return 4;
  }
}

}  // namespace trajinf
