#include "plateopt/errors.hpp"

namespace plateopt {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::InvalidProfile: return "InvalidProfile";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::SingularKKT: return "SingularKKT";
    case ErrorKind::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorKind::MalformedProfile: return "MalformedProfile";
    case ErrorKind::DegenerateMetric: return "DegenerateMetric";
    case ErrorKind::InvertedElement: return "InvertedElement";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError: return 2;
    case ErrorKind::NonConvergence: return 3;
    case ErrorKind::InvalidProfile: return 4;
    case ErrorKind::DomainError: return 5;
    case ErrorKind::SingularSystem: return 6;
    case ErrorKind::SingularKKT: return 7;
    case ErrorKind::DegenerateTriangle: return 8;
    case ErrorKind::MalformedProfile: return 9;
    case ErrorKind::DegenerateMetric: return 10;
    case ErrorKind::InvertedElement: return 11;
  }
  return 1;
}

}  // namespace plateopt
