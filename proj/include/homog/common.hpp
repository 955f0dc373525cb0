#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdio>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace homog {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = std::numbers::pi;

/// Value, gradient and Hessian of a scalar field at one point. Entries beyond
/// the requested derivative order are left at zero.
struct Jet {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

/// A pointwise scalar field with derivatives up to `order` (0, 1 or 2).
using JetFunction = std::function<Jet(const Vec2&, int order)>;
using ScalarFunction = std::function<double(const Vec2&)>;

// Frobenius contraction A:B.
inline double contract(const Mat2& a, const Mat2& b) { return (a.array() * b.array()).sum(); }

// ---------------------------------------------------------------------------
// Error hierarchy. Every failure raised by the library derives from Error.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class PeriodicityMismatch : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class EllipticityViolation : public Error {
 public:
  using Error::Error;
};

class CapabilityError : public Error {
 public:
  using Error::Error;
};

class MeshMismatch : public Error {
 public:
  using Error::Error;
};

class MeshTooCoarse : public Error {
 public:
  using Error::Error;
};

class LocationError : public Error {
 public:
  using Error::Error;
};

class WrongOracle : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, double residual)
      : Error(what + " (relative residual " + format(residual) + ")"), residual_(residual) {}
  /// Prefixes `context` to the message of `inner`.
  SolverFailure(const std::string& context, const SolverFailure& inner)
      : Error(context + ": " + inner.what()), residual_(inner.residual()) {}
  double residual() const noexcept { return residual_; }

 private:
  static std::string format(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", r);
    return buf;
  }
  double residual_;
};

/// The discrete cell problem is singular; the cell mesh must be refined.
class HTooCoarse : public SolverFailure {
 public:
  using SolverFailure::SolverFailure;
};

}  // namespace homog
