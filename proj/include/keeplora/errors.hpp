#pragma once

#include <stdexcept>
#include <string>

namespace keeplora {

// Shape mismatches between matrix operands.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failures: SVD non-convergence, zero-energy inputs,
// degenerate gradients, diverging losses.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid or missing configuration. Carries the offending field name so
// the CLI can surface it verbatim.
struct ConfigError : std::runtime_error {
  ConfigError(std::string field_name, const std::string& message)
      : std::runtime_error("config error [" + field_name + "]: " + message),
        field(std::move(field_name)) {}
  std::string field;
};

// Malformed input files (CSV, checkpoints). Message carries file and line.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace keeplora
