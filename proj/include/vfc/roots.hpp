#pragma once

#include <cmath>
#include <algorithm>

namespace vfc::roots {

/// Bisection on a sign-changing bracket [lo, hi]. Runs until the bracket is
/// below abs_tol + rel_tol*|x| or floating point stops making progress, so
/// passing zero tolerances yields the root to the last representable bit.
template <class F>
double bisect(const F& f, double lo, double hi, double abs_tol = 0.0, double rel_tol = 0.0,
              int max_iter = 2000) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  if (f(hi) == 0.0) return hi;
  for (int it = 0; it < max_iter; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= std::min(lo, hi) || mid >= std::max(lo, hi)) break;
    if (std::abs(hi - lo) <= abs_tol + rel_tol * std::abs(mid)) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return lo + 0.5 * (hi - lo);
}

/// Solves f(x) = y for a nondecreasing f on [lo, hi] when f(lo) <= y <= f(hi).
template <class F>
double invert_increasing(const F& f, double y, double lo, double hi, double rel_tol = 0.0) {
  return bisect([&](double x) { return f(x) - y; }, lo, hi, 0.0, rel_tol);
}


}  // namespace vfc::roots
