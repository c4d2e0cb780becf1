#pragma once

#include <stdexcept>
#include <string>

namespace qdc {

// Extent, arity or axis mismatch between operands.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A LAPACK decomposition did not converge.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bond dimension required by the cutoff exceeds the configured hard cap.
struct BondCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense 2^n x 2^n path requested for too many qubits.
struct DenseLimitError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A warm start cannot be laid onto the requested circuit architecture.
struct EmbeddingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite cost, gradient or decomposition input.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent run configuration / checkpoint document.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qdc
