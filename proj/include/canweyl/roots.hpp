#pragma once

#include <cmath>
#include <functional>

#include "canweyl/errors.hpp"

namespace canweyl {

/// Root of a non-decreasing f on [lo,hi] with f(lo) <= y <= f(hi):
/// bisection to relative tolerance in the argument.  Returns the left
/// edge of the level set {f >= y} (left-biased at plateaus and jumps).
template <class F>
double bisect_nondecreasing(const F& f, double lo, double hi, double y,
                            double rel_tol = 1e-12, int max_iter = 200) {
    if (!(lo <= hi)) throw BracketError("bisect: empty bracket");
    if (f(lo) >= y) return lo;
    if (f(hi) < y) throw BracketError("bisect: target above f(hi)");
    for (int i = 0; i < max_iter && hi - lo > rel_tol * (std::abs(lo) + std::abs(hi)) + 1e-300; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (f(mid) >= y ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace canweyl
