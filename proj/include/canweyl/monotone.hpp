#pragma once

// Non-decreasing functions on [x0, xend) with plateaus, jumps and explicit
// +inf tails, and their generalised inverses f^-(y) = inf{x : f(x) >= y},
// defined on the convex hull of the range.
//
// Two representations: an exact piecewise-linear-with-jumps form whose
// inverse is constructed symbolically, and a callable form inverted by
// left-biased bisection.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "canweyl/core.hpp"
#include "canweyl/errors.hpp"

namespace canweyl {

class MonotoneFunction {
public:
    struct Segment {
        double x;      // left knot of the piece (x, next knot]
        double v;      // right limit f(x+); may be +inf (then slope = 0)
        double slope;  // >= 0
    };

    MonotoneFunction() = default;

    /// Exact piecewise linear function with jumps; left-continuous at knots.
    /// f(x0) = f0; segments must be ordered and non-decreasing overall.
    static MonotoneFunction piecewise(double x0, double xend, double f0,
                                      std::vector<Segment> segs) {
        MonotoneFunction f;
        f.x0_ = x0;
        f.xend_ = xend;
        f.f0_ = f0;
        if (segs.empty()) segs.push_back({x0, f0, 0.0});
        double prev_limit = f0, prev_x = x0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (segs[i].x < prev_x - 1e-300 || (i > 0 && segs[i].x <= segs[i - 1].x))
                throw NotMonotone("monotone: segment knots must increase");
            if (segs[i].v < prev_limit - 1e-12 * (1.0 + std::abs(prev_limit)))
                throw NotMonotone("monotone: downward jump");
            if (segs[i].slope < 0.0) throw NotMonotone("monotone: negative slope");
            const double right = (i + 1 < segs.size()) ? segs[i + 1].x : xend;
            prev_limit = std::isfinite(segs[i].v)
                             ? segs[i].v + segs[i].slope * (std::isfinite(right) ? right - segs[i].x : inf)
                             : inf;
            if (!std::isfinite(segs[i].v)) prev_limit = inf;
            prev_x = segs[i].x;
        }
        f.segs_ = std::move(segs);
        f.compute_sup();
        return f;
    }

    /// Callable representation; `sup` is the limit at xend (may be inf).
    static MonotoneFunction from_callable(double x0, double xend,
                                          std::function<double(double)> fn,
                                          double sup, bool sup_attained = false) {
        MonotoneFunction f;
        f.x0_ = x0;
        f.xend_ = xend;
        f.fn_ = std::move(fn);
        f.f0_ = f.fn_(x0);
        f.sup_ = sup;
        f.sup_attained_ = sup_attained;
        return f;
    }

    double left() const { return x0_; }
    double right() const { return xend_; }
    double sup() const { return sup_; }
    bool sup_attained() const { return sup_attained_; }
    bool exact() const { return !fn_; }
    const std::vector<Segment>& segments() const { return segs_; }

    double operator()(double x) const {
        if (!(x >= x0_) || !(x <= xend_)) throw DomainError("monotone: x outside [x0, xend]");
        if (fn_) return fn_(std::min(x, xend_));
        if (x == x0_) return f0_;
        // last segment with knot < x
        std::size_t lo = 0, hi = segs_.size();
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (segs_[mid].x < x ? lo : hi) = mid;
        }
        const Segment& s = segs_[lo];
        if (segs_[lo].x >= x) return f0_;  // x in (x0, segs[0].x] region handled by f0 slope-0 lead-in
        if (!std::isfinite(s.v)) return inf;
        return s.v + s.slope * (x - s.x);
    }

    /// Generalised inverse on conv(ran f); DomainError outside.
    MonotoneFunction gen_inverse() const {
        if (!fn_) return exact_inverse();
        return numeric_inverse();
    }

    /// Query range of the inverse: [f(x0), sup] if the supremum is attained
    /// (including explicit +inf tails), [f(x0), sup) otherwise.
    bool inverse_defined_at(double y) const {
        if (y < f0_) return false;
        if (y < sup_) return true;
        return y == sup_ && sup_attained_;
    }

private:
    void compute_sup() {
        const Segment& s = segs_.back();
        if (!std::isfinite(s.v)) {
            sup_ = inf;
            sup_attained_ = true;  // the value +inf is attained on the tail
            return;
        }
        if (!std::isfinite(xend_)) {
            sup_ = s.slope > 0.0 ? inf : s.v;
            sup_attained_ = s.slope == 0.0;
            return;
        }
        sup_ = s.v + s.slope * (xend_ - s.x);
        sup_attained_ = s.slope == 0.0;
    }

    MonotoneFunction exact_inverse() const {
        std::vector<Segment> inv;
        double ycur = f0_;
        double prev_left_value = f0_;  // f at the current knot (left limit)
        for (std::size_t i = 0; i < segs_.size(); ++i) {
            const Segment& s = segs_[i];
            // jump at knot s.x: from prev_left_value to s.v
            if (!std::isfinite(s.v)) {
                // explicit +inf tail starting at s.x
                inv.push_back({ycur, s.x, 0.0});
                ycur = inf;
                break;
            }
            if (s.v > prev_left_value) {
                inv.push_back({ycur, s.x, 0.0});  // plateau of the inverse
                ycur = s.v;
            }
            const double right = (i + 1 < segs_.size()) ? segs_[i + 1].x : xend_;
            const double len = std::isfinite(right) ? right - s.x : inf;
            if (s.slope > 0.0) {
                inv.push_back({ycur, s.x, 1.0 / s.slope});
                ycur = std::isfinite(len) ? s.v + s.slope * len : inf;
                if (!std::isfinite(ycur)) break;
            }
            prev_left_value = std::isfinite(len) ? s.v + s.slope * len : s.v;
        }
        MonotoneFunction g;
        g.x0_ = f0_;
        g.xend_ = std::isfinite(ycur) ? ycur : inf;
        g.f0_ = x0_;
        if (inv.empty()) inv.push_back({f0_, x0_, 0.0});
        g.segs_ = std::move(inv);
        g.compute_sup();
        // the inverse of a bounded f is defined up to sup(f) inclusively only
        // when f attains it; record that by leaving xend at sup(f)
        return g;
    }

    MonotoneFunction numeric_inverse() const {
        auto self = *this;
        auto inv_fn = [self](double y) {
            if (!self.inverse_defined_at(y))
                throw DomainError("generalised inverse: y outside conv(ran f)");
            // left-biased bisection for inf{x : f(x) >= y}
            double lo = self.x0_;
            if (self(lo) >= y) return lo;
            double hi = self.xend_;
            if (!std::isfinite(hi)) {
                hi = std::max(std::abs(lo), 1.0);
                while (self(hi) < y) {
                    hi *= 2.0;
                    if (hi > 1e300) throw DomainError("generalised inverse: y above range");
                }
            }
            for (int i = 0; i < 200 && hi - lo > 1e-15 * (std::abs(lo) + std::abs(hi)) + 5e-324; ++i) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                (self(mid) >= y ? hi : lo) = mid;
            }
            return hi;
        };
        const double ymax = sup_;
        MonotoneFunction g;
        g.x0_ = f0_;
        g.xend_ = ymax;
        g.fn_ = inv_fn;
        g.f0_ = x0_;
        g.sup_ = xend_;
        g.sup_attained_ = false;
        return g;
    }

    double x0_ = 0.0, xend_ = inf;
    double f0_ = 0.0;
    double sup_ = inf;
    bool sup_attained_ = false;
    std::vector<Segment> segs_;          // exact representation (empty if callable)
    std::function<double(double)> fn_;   // callable representation
};

}  // namespace canweyl
