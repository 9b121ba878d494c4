#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nonuniq {

using Vector = Eigen::VectorXd;

/// Base class for every failure raised by the numerical modules.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments was violated (parameter ranges, N <= 2, ...).
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The tail integral of 1/f did not converge.
class DivergentTailError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Argument outside the range of a monotone map (e.g. F^{-1}(s) with s > sup F).
class OutOfRangeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Adaptive integrator could not keep the step size above the roundoff floor.
class StepUnderflowError : public NumericalError {
 public:
  StepUnderflowError(const std::string& what, double last_valid)
      : NumericalError(what), last_valid_(last_valid) {}
  double last_valid() const noexcept { return last_valid_; }

 private:
  double last_valid_;
};

/// Real number or +infinity, kept as a tag so regime tests can branch exactly.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT: implicit by design of the value type

  static constexpr ExtendedReal infinity() {
    ExtendedReal x;
    x.infinite_ = true;
    return x;
  }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr bool is_finite() const { return !infinite_; }

  /// Finite value; +inf as an IEEE double for the infinite case.
  constexpr double value() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend constexpr bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }
  friend constexpr bool operator>(const ExtendedReal& a, const ExtendedReal& b) { return b < a; }
  friend constexpr bool operator<=(const ExtendedReal& a, const ExtendedReal& b) { return !(b < a); }
  friend constexpr bool operator>=(const ExtendedReal& a, const ExtendedReal& b) { return !(a < b); }
  friend constexpr bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

  std::string to_string() const;

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

/// Relative difference |a-b| / max(|a|,|b|,floor).
inline double relative_difference(double a, double b, double floor = 1e-300) {
  const double scale = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / scale;
}

}  // namespace nonuniq
