#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fsde {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError -> 2, ResourceError -> 3, NumericalError (and its kin) -> 4.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class ResourceError : public std::runtime_error {
public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Circulant embedding produced an eigenvalue below the numerical floor.
class EmbeddingError : public NumericalError {
public:
  EmbeddingError(const std::string& what, double worst_eigenvalue)
      : NumericalError(what), worst_eigenvalue_(worst_eigenvalue) {}
  double worst_eigenvalue() const { return worst_eigenvalue_; }

private:
  double worst_eigenvalue_;
};

// Non-finite state reached during time stepping; carries the offending step.
class BlowUpError : public NumericalError {
public:
  BlowUpError(const std::string& what, std::int64_t step)
      : NumericalError(what), step_(step) {}
  std::int64_t step() const { return step_; }

private:
  std::int64_t step_;
};

}  // namespace fsde
