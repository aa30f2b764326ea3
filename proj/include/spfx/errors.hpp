#pragma once

#include <stdexcept>
#include <string>

namespace spfx {

// Base class for all spfx errors.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or dimensionality disagreement between inputs.
struct dimension_error : error {
  using error::error;
};

// Row or column id outside the addressed container.
struct index_error : error {
  using error::error;
};

// Malformed, truncated, or wrong-magic file content.
struct format_error : error {
  using error::error;
};

// Parameter outside its mathematical domain (e.g. sigma <= 0).
struct domain_error : error {
  using error::error;
};

// Invalid or inconsistent run configuration.
struct config_error : error {
  using error::error;
};

// Numerical failure: divergence, non-finite intermediate values.
struct numeric_error : error {
  using error::error;
};

}  // namespace spfx
