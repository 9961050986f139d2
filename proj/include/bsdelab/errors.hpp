#pragma once

#include <stdexcept>
#include <string>

namespace bsdelab {

/// Bad or inconsistent configuration (unknown keys, missing fields, budget).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Structural violation in a built model or measure; carries the node path.
struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (non-convergence, overflow guard, bound violation).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bsdelab
