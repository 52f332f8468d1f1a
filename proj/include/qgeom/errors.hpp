#pragma once

#include <stdexcept>
#include <string>

namespace qgeom {

// Base for every error raised by the library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invalid_input : error {
  using error::error;
};

// Raised at the degeneracy point 1 + r^2 + 2 r cos(theta) = 0 (closed gap).
struct singularity_error : error {
  using error::error;
};

struct numerical_error : error {
  using error::error;
};

// Quadrature grid does not span the requested interval.
struct coverage_error : error {
  using error::error;
};

struct precondition_error : error {
  using error::error;
};

struct insufficient_data : error {
  using error::error;
};

struct fit_failed : error {
  using error::error;
};

struct refinement_failed : error {
  using error::error;
};

}  // namespace qgeom
