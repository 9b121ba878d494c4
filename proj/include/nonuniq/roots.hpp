#pragma once

#include "nonuniq/common.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace nonuniq {

/// Root of a continuous function on a bracketing interval [a, b].
template <typename Scalar, typename F>
Scalar bracketed_root(F&& f, Scalar a, Scalar b, Scalar fa, Scalar fb,
                      int bits = std::numeric_limits<Scalar>::digits - 3) {
  if (fa == 0) return a;
  if (fb == 0) return b;
  if ((fa < 0) == (fb < 0)) throw NumericalError("root not bracketed");
  std::uintmax_t iters = 300;
  boost::math::tools::eps_tolerance<Scalar> tol(bits);
  const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  return (r.first + r.second) / 2;
}

template <typename Scalar, typename F>
Scalar bracketed_root(F&& f, Scalar a, Scalar b) {
  return bracketed_root(f, a, b, f(a), f(b));
}

}  // namespace nonuniq
