#pragma once

#include <stdexcept>

namespace subdiff {

/// Invalid or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure in a forward or oracle computation.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when an oracle quadrature fails to reach its tolerance.
class QuadratureError : public SolverError {
public:
  using SolverError::SolverError;
};

/// Mesh generation failure.
class MeshError : public SolverError {
public:
  using SolverError::SolverError;
};

/// An inversion step could not produce a reconstruction.
class ReconstructionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Output files or directories could not be written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace subdiff
