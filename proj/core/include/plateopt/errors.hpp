#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace plateopt {

enum class ErrorKind {
  NonConvergence,
  InvalidProfile,
  DomainError,
  SingularSystem,
  SingularKKT,
  DegenerateTriangle,
  MalformedProfile,
  DegenerateMetric,
  InvertedElement,
  ConfigError,
};

const char* error_kind_name(ErrorKind kind);

// Process exit status used by the command-line tool for each error kind.
int exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct NonConvergence : Error {
  explicit NonConvergence(const std::string& w) : Error(ErrorKind::NonConvergence, w) {}
};
struct InvalidProfile : Error {
  explicit InvalidProfile(const std::string& w) : Error(ErrorKind::InvalidProfile, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::DomainError, w) {}
};
struct SingularSystem : Error {
  explicit SingularSystem(const std::string& w) : Error(ErrorKind::SingularSystem, w) {}
};
struct SingularKKT : Error {
  SingularKKT(const std::string& w, std::vector<int> nodes)
      : Error(ErrorKind::SingularKKT, w), offending_nodes(std::move(nodes)) {}
  std::vector<int> offending_nodes;
};
struct DegenerateTriangle : Error {
  DegenerateTriangle(const std::string& w, int tri) : Error(ErrorKind::DegenerateTriangle, w), triangle(tri) {}
  int triangle;
};
struct MalformedProfile : Error {
  explicit MalformedProfile(const std::string& w) : Error(ErrorKind::MalformedProfile, w) {}
};
struct DegenerateMetric : Error {
  explicit DegenerateMetric(const std::string& w) : Error(ErrorKind::DegenerateMetric, w) {}
};
struct InvertedElement : Error {
  InvertedElement(const std::string& w, int tri) : Error(ErrorKind::InvertedElement, w), triangle(tri) {}
  int triangle;
};
struct ConfigError : Error {
  ConfigError(const std::string& w, int line_no) : Error(ErrorKind::ConfigError, w), line(line_no) {}
  int line;
};

}  // namespace plateopt
