#pragma once

#include <stdexcept>
#include <string>

namespace fsilab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FSILAB_ERROR(Name)          \
  class Name : public Error {       \
   public:                          \
    using Error::Error;             \
  };

FSILAB_ERROR(DisplacementTooLarge)
FSILAB_ERROR(DegenerateTangent)
FSILAB_ERROR(OrientationLost)
FSILAB_ERROR(InverseMapFailure)
FSILAB_ERROR(SingularMass)
FSILAB_ERROR(ZeroWeight)
FSILAB_ERROR(InadmissibleTest)
FSILAB_ERROR(IncompatibleDatum)
FSILAB_ERROR(ValidationError)

#undef FSILAB_ERROR

/// Raised when a displacement reaches the geometric margin; carries the time.
class StoppingRule : public Error {
 public:
  StoppingRule(double time, double sup_norm)
      : Error("stopping rule: |eta|_inf = " + std::to_string(sup_norm) +
              " reached the margin at t = " + std::to_string(time)),
        time_(time),
        sup_norm_(sup_norm) {}
  double time() const { return time_; }
  double sup_norm() const { return sup_norm_; }

 private:
  double time_;
  double sup_norm_;
};

class NonConvergence : public Error {
 public:
  NonConvergence(int iterations, double residual)
      : Error("fixed point did not converge after " + std::to_string(iterations) +
              " iterations (residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class ParseError : public Error {
 public:
  ParseError(int line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + (field.empty() ? "" : " [" + field + "]") + ": " + what),
        line_(line),
        field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

}  // namespace fsilab
