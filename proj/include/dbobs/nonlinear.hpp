#pragma once

// Set-based deadbeat observers for nonlinear systems x+ = f(x[, u]), y = h(x).
//
// The observer is x̂+ = f([x̂]^+_{p−2} ∩ h^{-1}(y)[, u]). Computing the class
// intersection needs closed forms for [x]_k, so an ObservedSystem carries it
// as a user-supplied function. Two third-order systems ship with it.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dbobs/error.hpp"
#include "dbobs/linear.hpp"

namespace dbobs {

using Vector3 = Eigen::Vector3d;

struct ObservedSystem {
  std::string name;
  int state_dim = 0;
  bool has_input = false;
  /// Horizon at which [x]_{p−1} is a singleton.
  int p = 0;
  /// x+ = f(x, u); u is ignored when has_input is false.
  std::function<Vector(const Vector&, double)> step;
  std::function<double(const Vector&)> output;
  /// The single point of [x̂]^+_{p−2} ∩ h^{-1}(y).
  std::function<Vector(const Vector&, double)> class_intersection;
  std::function<bool(const Vector&)> in_domain;

  Vector observer_step(const Vector& xhat, double y, double u) const { return step(class_intersection(xhat, y), u); }
};

using NonlinearTrace = ObserverTrace;

// Homogeneous example ---------------------------------------------------------

/// (x2, x3^{1/3}, x1^3 + x2^3), real cube root.
inline Vector3 homog_f(const Vector3& x) {
  return {x(1), std::cbrt(x(2)), x(0) * x(0) * x(0) + x(1) * x(1) * x(1)};
}

/// ((x3 − x1^3)^{1/3}, x1, x2^3).
inline Vector3 homog_f_inverse(const Vector3& x) {
  return {std::cbrt(x(2) - x(0) * x(0) * x(0)), x(0), x(1) * x(1) * x(1)};
}

inline double homog_h(const Vector3& x) { return x(0); }

/// (y, x̂2, x̂3 − x̂1^3 + y^3).
inline Vector3 homog_class_intersection(const Vector3& xhat, double y) {
  return {y, xhat(1), xhat(2) - xhat(0) * xhat(0) * xhat(0) + y * y * y};
}

/// (x̂2, (x̂3 − x̂1^3 + y^3)^{1/3}, x̂2^3 + y^3).
inline Vector3 homog_observer_step(const Vector3& xhat, double y) {
  const double y3 = y * y * y;
  return {xhat(1), std::cbrt(xhat(2) - xhat(0) * xhat(0) * xhat(0) + y3), xhat(1) * xhat(1) * xhat(1) + y3};
}

/// Δ_λ x = (λ x1, λ x2, λ^3 x3).
inline Vector3 dilation_apply(double lambda, const Vector3& x) {
  return {lambda * x(0), lambda * x(1), lambda * lambda * lambda * x(2)};
}

// Example with input ----------------------------------------------------------

/// States at or below this are treated as having left the positive orthant.
inline constexpr double kPositiveFloor = 1e-300;

namespace detail {

inline bool positive(double v) { return std::isfinite(v) && v > kPositiveFloor; }

inline void require_positive(const Vector3& x, const char* what) {
  for (int i = 0; i < 3; ++i) {
    if (!positive(x(i))) {
      throw DomainError(std::string(what) + ": component " + std::to_string(i + 1) +
                        " is not positive (" + std::to_string(x(i)) + ")");
    }
  }
}

inline void require_positive(double v, const char* what) {
  if (!positive(v)) throw DomainError(std::string(what) + " is not positive (" + std::to_string(v) + ")");
}

inline Vector3 as3(const Vector& v, const char* what) {
  if (v.size() != 3) throw InvalidInput(std::string(what) + ": expected a 3-vector");
  return Vector3(v(0), v(1), v(2));
}

}  // namespace detail

/// (x1 x2 x3, x3 / x1, sqrt(x1 x2 u)) on the open positive orthant.
inline Vector3 input_f(const Vector3& x, double u) {
  detail::require_positive(x, "input_f: state");
  detail::require_positive(u, "input_f: input");
  return {x(0) * x(1) * x(2), x(2) / x(0), std::sqrt(x(0) * x(1) * u)};
}

inline double input_h(const Vector3& x) { return x(0); }

/// The state mapped to x by input_f(., u).
inline Vector3 input_f_preimage(const Vector3& x, double u) {
  detail::require_positive(x, "input_f_preimage: state");
  detail::require_positive(u, "input_f_preimage: input");
  const double x3sq = x(2) * x(2);
  return {x(0) * u / (x(1) * x3sq), x(1) * x3sq * x3sq / (x(0) * u * u), x(0) * u / x3sq};
}

/// (y, x̂1 x̂2 / y, x̂3 y / x̂1).
inline Vector3 input_class_intersection(const Vector3& xhat, double y) {
  detail::require_positive(xhat, "input observer: estimate");
  detail::require_positive(y, "input observer: measurement");
  return {y, xhat(0) * xhat(1) / y, xhat(2) * y / xhat(0)};
}

/// (x̂2 x̂3 y, x̂3 / x̂1, sqrt(x̂1 x̂2 u)).
inline Vector3 input_observer_step(const Vector3& xhat, double y, double u) {
  detail::require_positive(xhat, "input_observer_step: estimate");
  detail::require_positive(y, "input_observer_step: measurement");
  detail::require_positive(u, "input_observer_step: input");
  return {xhat(1) * xhat(2) * y, xhat(2) / xhat(0), std::sqrt(xhat(0) * xhat(1) * u)};
}

// Packaged systems ------------------------------------------------------------

inline ObservedSystem homogeneous_system() {
  ObservedSystem s;
  s.name = "homogeneous";
  s.state_dim = 3;
  s.has_input = false;
  s.p = 3;
  s.step = [](const Vector& x, double) -> Vector { return homog_f(detail::as3(x, "homogeneous")); };
  s.output = [](const Vector& x) { return homog_h(detail::as3(x, "homogeneous")); };
  s.class_intersection = [](const Vector& xhat, double y) -> Vector {
    return homog_class_intersection(detail::as3(xhat, "homogeneous"), y);
  };
  s.in_domain = [](const Vector& x) { return x.size() == 3 && x.allFinite(); };
  return s;
}

inline ObservedSystem with_input_system() {
  ObservedSystem s;
  s.name = "with-input";
  s.state_dim = 3;
  s.has_input = true;
  s.p = 3;
  s.step = [](const Vector& x, double u) -> Vector { return input_f(detail::as3(x, "with-input"), u); };
  s.output = [](const Vector& x) { return input_h(detail::as3(x, "with-input")); };
  s.class_intersection = [](const Vector& xhat, double y) -> Vector {
    return input_class_intersection(detail::as3(xhat, "with-input"), y);
  };
  s.in_domain = [](const Vector& x) {
    return x.size() == 3 && detail::positive(x(0)) && detail::positive(x(1)) && detail::positive(x(2));
  };
  return s;
}

/// Looks up a packaged system: "homogeneous" or "with-input".
inline ObservedSystem system_by_name(const std::string& name) {
  if (name == "homogeneous") return homogeneous_system();
  if (name == "with-input") return with_input_system();
  throw InvalidInput("unknown example '" + name + "' (expected homogeneous or with-input)");
}

/// Runs plant and observer for `steps` steps. `inputs` must hold at least
/// `steps` values when the system has an input (ignored otherwise).
inline NonlinearTrace run_observer(const ObservedSystem& sys, const Vector& x0, const Vector& xhat0,
                                   const std::vector<double>& inputs, int steps, double horizon_tol = kHorizonTol) {
  if (steps < sys.p) throw InvalidInput("run_observer: steps must be at least p = " + std::to_string(sys.p));
  if (x0.size() != sys.state_dim || xhat0.size() != sys.state_dim) {
    throw InvalidInput("run_observer: initial states must have dimension " + std::to_string(sys.state_dim));
  }
  if (sys.has_input && inputs.size() < static_cast<std::size_t>(steps)) {
    throw InvalidInput("run_observer: need at least " + std::to_string(steps) + " input values");
  }

  NonlinearTrace trace;
  Vector x = x0;
  Vector xhat = xhat0;
  for (int k = 0; k <= steps; ++k) {
    if (!sys.in_domain(x)) throw DomainError("run_observer: plant state left the domain at step " + std::to_string(k));
    if (!sys.in_domain(xhat)) {
      throw DomainError("run_observer: observer state left the domain at step " + std::to_string(k));
    }
    trace.plant_states.push_back(x);
    trace.observer_states.push_back(xhat);
    trace.errors.push_back((xhat - x).norm());
    double u = 0.0;
    if (sys.has_input) {
      const auto idx = static_cast<std::size_t>(k);
      u = idx < inputs.size() ? inputs[idx] : std::numeric_limits<double>::quiet_NaN();
      trace.inputs.push_back(u);
    }
    if (k == steps) break;
    try {
      const double y = sys.output(x);
      xhat = sys.observer_step(xhat, y, u);
      x = sys.step(x, u);
    } catch (const DomainError& e) {
      throw DomainError("step " + std::to_string(k) + ": " + e.what());
    }
  }
  trace.deadbeat_horizon = deadbeat_horizon(trace, horizon_tol);
  return trace;
}

}  // namespace dbobs
