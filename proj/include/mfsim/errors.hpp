#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mfsim {

/// Base class for every error raised by the toolkit. `code()` is a short
/// stable identifier used by the CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message) : Error("invalid_argument", message) {}
};

class InvalidMeasure : public Error {
 public:
  explicit InvalidMeasure(const std::string& message) : Error("invalid_measure", message) {}
};

/// A test function or coefficient produced a non-finite value.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& message, std::vector<double> point)
      : Error("evaluation", message), point_(std::move(point)) {}

  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::vector<double> point_;
};

class UnsupportedDimension : public Error {
 public:
  explicit UnsupportedDimension(const std::string& message)
      : Error("unsupported_dimension", message) {}
};

class MassMismatch : public Error {
 public:
  explicit MassMismatch(const std::string& message) : Error("mass_mismatch", message) {}
};

/// 2a - sigma sigma^T has an eigenvalue below -psd_tolerance.
class ParabolicityViolation : public Error {
 public:
  ParabolicityViolation(double t, std::vector<double> x, double eigenvalue);

  double time() const noexcept { return t_; }
  const std::vector<double>& point() const noexcept { return x_; }
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double t_;
  std::vector<double> x_;
  double eigenvalue_;
};

class IncompleteDerivative : public Error {
 public:
  explicit IncompleteDerivative(const std::string& message)
      : Error("incomplete_derivative", message) {}
};

class IncompatibleTrajectory : public Error {
 public:
  explicit IncompatibleTrajectory(const std::string& message)
      : Error("incompatible_trajectory", message) {}
};

class ConditioningMismatch : public Error {
 public:
  explicit ConditioningMismatch(const std::string& message)
      : Error("conditioning_mismatch", message) {}
};

class InsufficientSamples : public Error {
 public:
  explicit InsufficientSamples(const std::string& message)
      : Error("insufficient_samples", message) {}
};

class ReferenceQuality : public Error {
 public:
  explicit ReferenceQuality(const std::string& message) : Error("reference_quality", message) {}
};

class AssumptionViolation : public Error {
 public:
  explicit AssumptionViolation(const std::string& message)
      : Error("assumption_violation", message) {}
};

/// Configuration problems. The code distinguishes e.g. "unknown_model",
/// "invalid_grid", "invalid_config" and "io_failure".
class ConfigError : public Error {
 public:
  ConfigError(std::string code, const std::string& message) : Error(std::move(code), message) {}
};

}  // namespace mfsim
