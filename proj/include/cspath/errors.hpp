#pragma once

#include <stdexcept>
#include <string>

namespace cspath {

/// Invalid user-supplied configuration (bounds, counts, unknown names).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Mismatched vector/matrix sizes.
class DimensionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A right-hand side or objective could not be evaluated at the given state
/// (e.g. q = 0 in the shallow-lake control -1/q). Carries the first
/// offending node, -1 if not node-local.
class EvaluationError : public std::runtime_error {
public:
  EvaluationError(const std::string& msg, int node = -1)
      : std::runtime_error(node >= 0 ? msg + " (node " + std::to_string(node) + ")" : msg),
        node_(node) {}
  int node() const noexcept { return node_; }

private:
  int node_;
};

/// Newton iteration did not reach the requested tolerance.
class NewtonFailure : public std::runtime_error {
public:
  NewtonFailure(const std::string& msg, double residual)
      : std::runtime_error(msg + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

/// Eigenvalue solver failure or unusable spectrum.
class SpectralError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An eigenvalue sits on (or numerically at) the imaginary axis, so stable
/// and unstable directions cannot be separated.
class DegenerateSpectrum : public SpectralError {
public:
  using SpectralError::SpectralError;
};

/// The terminal projection does not make the boundary value problem square
/// (target CSS without the saddle-point property).
class ProjectionMismatch : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// File format or persistence failure.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace cspath
