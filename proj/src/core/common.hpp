#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpelod {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;
using RVector = std::vector<double>;

inline constexpr Complex kI{0.0, 1.0};

enum class ErrorCode {
  invalid_argument = 1,
  dimension_mismatch,
  singular_matrix,
  not_converged,
  io,
  config,
  assertion,
};

// Base of every exception thrown by the library. The C API maps `code()`
// onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCode::invalid_argument, what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what)
      : Error(ErrorCode::dimension_mismatch, what) {}
};

class SingularMatrix : public Error {
 public:
  explicit SingularMatrix(const std::string& what)
      : Error(ErrorCode::singular_matrix, what) {}
};

class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, int iterations, double residual)
      : Error(ErrorCode::not_converged, what),
        iterations_(iterations),
        residual_(residual) {}
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCode::config, what) {}
};

// Euclidean helpers used all over the place.
double norm2(std::span<const Complex> v);
double norm2(std::span<const double> v);

}  // namespace gpelod
