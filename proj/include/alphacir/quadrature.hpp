#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <stdexcept>
#include <string>

namespace alphacir {

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Adaptive Gauss-Kronrod (15-point) on [lo, hi]. Throws QuadratureError
// when the error estimate does not reach abs_tol instead of returning a
// silently truncated value.
template <typename F>
double integrate_gk(F&& f, double lo, double hi, double abs_tol = 1e-10,
                    unsigned max_depth = 15) {
  if (lo == hi) return 0.0;
  double err = 0.0;
  const double val = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, lo, hi, max_depth, 1e-15, &err);
  // err is the absolute error estimate of the final refinement
  if (!(err <= abs_tol) || !std::isfinite(val)) {
    throw QuadratureError("gauss-kronrod quadrature did not reach abs tol " +
                          std::to_string(abs_tol));
  }
  return val;
}

// Independent second rule (tanh-sinh) used for cross-checks.
template <typename F>
double integrate_tanh_sinh(F&& f, double lo, double hi, double tol = 1e-12) {
  if (lo == hi) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator;
  double err = 0.0, l1 = 0.0;
  const double val = integrator.integrate(f, lo, hi, tol, &err, &l1);
  if (!std::isfinite(val)) {
    throw QuadratureError("tanh-sinh quadrature diverged");
  }
  return val;
}

}  // namespace alphacir
