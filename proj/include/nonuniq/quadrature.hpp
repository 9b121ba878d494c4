#pragma once

#include "nonuniq/common.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>

namespace nonuniq {

/// Adaptive Gauss-Kronrod (15 points) on a finite interval.
template <typename Scalar, typename F>
Scalar integrate(F&& f, Scalar a, Scalar b, Scalar rtol = Scalar(1e-13), unsigned max_depth = 12,
                 Scalar* error = nullptr) {
  if (a == b) return Scalar(0);
  Scalar err = 0;
  const Scalar v = boost::math::quadrature::gauss_kronrod<Scalar, 15>::integrate(
      f, a, b, max_depth, rtol, &err);
  if (error) *error = err;
  return v;
}

/// Fixed 15-point Gauss-Kronrod rule (no adaptivity), for smooth short panels.
template <typename Scalar, typename F>
Scalar integrate_panel(F&& f, Scalar a, Scalar b) {
  if (a == b) return Scalar(0);
  return boost::math::quadrature::gauss_kronrod<Scalar, 15>::integrate(f, a, b, 0, Scalar(0));
}

/// Integral over [a, inf) of a positive integrand, summed on geometrically growing
/// panels. `tail_bound(x)` must return an estimate of the integral over [x, inf);
/// summation stops when that estimate falls below rtol times the running sum.
template <typename Scalar, typename F, typename Tail>
Scalar integrate_to_infinity(F&& f, Scalar a, Scalar first_width, Tail&& tail_bound,
                             Scalar rtol = Scalar(1e-13), int max_panels = 4000) {
  Scalar sum = 0;
  Scalar x = a;
  Scalar w = first_width;
  for (int k = 0; k < max_panels; ++k) {
    // panels already follow the decay scale; deep bisection only chases roundoff
    const Scalar piece = integrate(f, x, x + w, rtol, 6);
    sum += piece;
    x += w;
    const Scalar tail = tail_bound(x);
    if (std::isfinite(tail) && tail <= rtol * sum) return sum + tail;
    w *= 2;
    if (!std::isfinite(x)) break;
  }
  throw DivergentTailError("tail integral did not converge");
}

}  // namespace nonuniq
