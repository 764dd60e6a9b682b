#ifndef RKBS_ERROR_HPP
#define RKBS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace rkbs {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Point outside the kernel's domain (e.g. min kernel off the unit cube).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameters or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Divergence, non-finite iterates, or a failed linear solve.
class SolverError : public Error {
 public:
  using Error::Error;
};

class UnsupportedPiece : public Error {
 public:
  using Error::Error;
};

class ModelFormatError : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

class SchemaViolation : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

}  // namespace rkbs

#endif  // RKBS_ERROR_HPP
