#pragma once

#include <stdexcept>
#include <string>

namespace hierarg {

/// Base class of every failure raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grid or transform size that the spectral machinery cannot handle.
class sizing_error : public error {
 public:
  using error::error;
};

/// Argument outside the mathematical domain of an operation.
class domain_error : public error {
 public:
  using error::error;
};

/// α·w0 ≥ 1: the phase-plane orbit is not closed.
class unbounded_orbit_error : public domain_error {
 public:
  using domain_error::domain_error;
};

/// α ≥ 2/j²: branch j does not exist yet.
class no_branch_error : public domain_error {
 public:
  using domain_error::domain_error;
};

class blow_up_error : public error {
 public:
  blow_up_error(double t, double x, double value)
      : error("blow-up at t = " + std::to_string(t) + ", x = " + std::to_string(x) +
              " (|v| = " + std::to_string(value) + ")"),
        t_(t),
        x_(x) {}

  double time() const noexcept { return t_; }
  double position() const noexcept { return x_; }

 private:
  double t_;
  double x_;
};

/// A computed quantity missed its accuracy budget.
class accuracy_error : public error {
 public:
  accuracy_error(const std::string& what, double worst_x)
      : error(what), worst_x_(worst_x) {}

  double worst_position() const noexcept { return worst_x_; }

 private:
  double worst_x_;
};

class estimation_error : public error {
 public:
  using error::error;
};

class resummation_error : public error {
 public:
  using error::error;
};

class truncation_error : public error {
 public:
  using error::error;
};

class unresolved_spectrum_error : public error {
 public:
  using error::error;
};

class convergence_error : public error {
 public:
  using error::error;
};

/// A proven property (positivity, monotonicity, identity) failed numerically.
class property_violation : public error {
 public:
  property_violation(const std::string& what, double where)
      : error(what), where_(where) {}

  double where() const noexcept { return where_; }

 private:
  double where_;
};

}  // namespace hierarg
