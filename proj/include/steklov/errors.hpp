#pragma once

#include <stdexcept>
#include <string>

namespace steklov {

// Every failure raised by the library derives from Error so that callers
// (the CLI in particular) can report the originating module.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what) : Error("geometry", what) {}
};

class DegenerateCornerError : public GeometryError {
 public:
  explicit DegenerateCornerError(const std::string& what) : GeometryError(what) {}
};

class MeshError : public Error {
 public:
  explicit MeshError(const std::string& what) : Error("mesh", what) {}
};

class AssemblyError : public Error {
 public:
  explicit AssemblyError(const std::string& what) : Error("fem", what) {}
};

class FactorizationError : public Error {
 public:
  explicit FactorizationError(const std::string& what) : Error("fem", what) {}
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double condition_estimate)
      : Error("fem", what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

class TruncationError : public Error {
 public:
  explicit TruncationError(const std::string& what) : Error("sector", what) {}
};

class DomainError : public Error {
 public:
  DomainError(std::string module, const std::string& what) : Error(std::move(module), what) {}
};

class FitError : public Error {
 public:
  explicit FitError(const std::string& what) : Error("weyl", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class ContractError : public Error {
 public:
  ContractError(std::string module, const std::string& what) : Error(std::move(module), what) {}
};

}  // namespace steklov
