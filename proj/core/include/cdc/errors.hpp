#pragma once

#include <stdexcept>
#include <string>

namespace cdc {

/// Invalid or inconsistent input data (bad scene, empty dataset, malformed file).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (truncation cap exceeded, negative probability, non-convergence).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cdc
