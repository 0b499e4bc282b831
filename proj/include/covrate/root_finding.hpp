#pragma once

#include <cmath>
#include <string>

#include "covrate/error.hpp"

namespace covrate {

struct BisectOptions {
  double abs_tol = 1e-12;
  int max_iter = 200;
};

/// Root of a continuous monotone f on [lo, hi]. The bracket is checked before
/// iterating: f(lo) and f(hi) must not share a strict sign.
template <class F>
double bisect(F&& f, double lo, double hi, BisectOptions opt = {}) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw Error(ErrorKind::BracketFailure, "f(" + std::to_string(lo) + ")=" + std::to_string(flo) + ", f(" +
                                               std::to_string(hi) + ")=" + std::to_string(fhi));
  for (int it = 0; it < opt.max_iter && hi - lo > opt.abs_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace covrate
