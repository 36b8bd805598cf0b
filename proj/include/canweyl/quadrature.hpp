#pragma once

// Adaptive Gauss-Kronrod (7,15) panel quadrature with an embedded error
// estimate.  Panels are split at the midpoint until the local estimate
// meets the tolerance share of the panel.

#include <cmath>
#include <cstddef>

#include "canweyl/errors.hpp"

namespace canweyl {

struct QuadResult {
    double value;
    double error;  // estimate of the absolute error
};

namespace detail {

// QUADPACK dqk15 nodes and weights on [-1,1]
inline constexpr double gk_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
QuadResult gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    for (int i = 0; i < 7; ++i) {
        const double fv = f(c - h * gk_x[i]) + f(c + h * gk_x[i]);
        resk += gk_wk[i] * fv;
        if (i % 2 == 1) resg += gk_wg[i / 2] * fv;
    }
    const double f0 = f(c);
    resk += gk_wk[7] * f0;
    resg += gk_wg[3] * f0;
    const double value = resk * h;
    double err = std::abs((resk - resg) * h);
    err = std::pow(200.0 * err, 1.5) < err ? std::pow(200.0 * err, 1.5) : err;
    return {value, err};
}

template <class F>
void gk_adaptive(const F& f, double a, double b, double abs_tol, double rel_tol,
                 int depth, double& value, double& err, int& panels) {
    QuadResult r = gk15(f, a, b);
    const double tol = std::max(abs_tol, rel_tol * std::abs(r.value));
    if (r.error <= tol || depth <= 0) {
        if (r.error > tol && depth <= 0)
            throw QuadratureError("quadrature: tolerance unreachable (panel depth cap)");
        value += r.value;
        err += r.error;
        ++panels;
        return;
    }
    const double c = 0.5 * (a + b);
    gk_adaptive(f, a, c, 0.5 * abs_tol, rel_tol, depth - 1, value, err, panels);
    gk_adaptive(f, c, b, 0.5 * abs_tol, rel_tol, depth - 1, value, err, panels);
}

}  // namespace detail

/// Adaptive integral of f over [a,b] (finite endpoints).
template <class F>
QuadResult integrate(const F& f, double a, double b, double rel_tol = 1e-10,
                     double abs_tol = 0.0, int max_depth = 52) {
    if (a == b) return {0.0, 0.0};
    double sign = 1.0;
    if (a > b) { std::swap(a, b); sign = -1.0; }
    // seed the absolute budget from a first sweep
    QuadResult probe = detail::gk15(f, a, b);
    double budget = std::max(abs_tol, rel_tol * std::abs(probe.value));
    if (budget == 0.0) budget = 1e-300;
    double value = 0.0, err = 0.0;
    int panels = 0;
    detail::gk_adaptive(f, a, b, budget, rel_tol, max_depth, value, err, panels);
    return {sign * value, err};
}

/// Integral over [a, +inf): mapped tail u = 1/t past a finite split point.
template <class F>
QuadResult integrate_to_infinity(const F& f, double a, double split,
                                 double rel_tol = 1e-10) {
    if (split < a) split = a;
    if (split <= 0.0) split = 1.0;
    QuadResult head{0.0, 0.0};
    if (split > a) head = integrate(f, a, split, rel_tol);
    const auto tail_f = [&f](double u) { return f(1.0 / u) / (u * u); };
    QuadResult tail = integrate(tail_f, 0.0, 1.0 / split, rel_tol);
    return {head.value + tail.value, head.error + tail.error};
}

enum class IntegralVerdict { Convergent, Divergent, Inconclusive };

/// Convergence verdict for int_{lo}^{hi} f with a possible singularity at lo.
/// The integrals over (lo + eps_k, hi), eps_k = (hi-lo) 4^{-k}, are built
/// incrementally from one annulus per refinement.  Convergent when three
/// consecutive refinements agree to 1e-6 relative (directly, or through the
/// geometric tail extrapolated from a stable annulus ratio); divergent when
/// the values grow without bound.
template <class F>
IntegralVerdict endpoint_refinement_verdict(const F& f, double lo, double hi,
                                            double* value = nullptr) {
    const double span = hi - lo;
    double total;
    try {
        total = integrate([&](double t) { return f(t); }, lo + span * std::pow(4.0, -2), hi,
                          1e-9).value;
    } catch (const QuadratureError&) {
        return IntegralVerdict::Inconclusive;
    }
    const double first = total;
    int stable = 0;
    double prev_inc = -1.0;
    int ratio_up = 0, ratio_flat = 0;
    for (int k = 3; k <= 110; ++k) {
        const double eps = span * std::pow(4.0, -k);
        if (lo + eps == lo) break;  // underflow of the refinement
        double inc;
        try {
            inc = integrate([&](double t) { return f(t); }, lo + eps, lo + 4.0 * eps, 1e-9).value;
        } catch (const QuadratureError&) {
            return IntegralVerdict::Inconclusive;
        }
        total += inc;
        const double ainc = std::abs(inc);
        if (ainc <= 1e-6 * std::abs(total)) {
            if (++stable >= 3) {
                if (value) *value = total;
                return IntegralVerdict::Convergent;
            }
        } else {
            stable = 0;
        }
        if (prev_inc > 0.0 && ainc > 0.0) {
            const double ratio = ainc / prev_inc;
            ratio_up = ratio >= 1.0 ? ratio_up + 1 : 0;
            ratio_flat = ratio >= 0.999 ? ratio_flat + 1 : 0;
            // stable geometric decay: extrapolate the remaining tail
            if (ratio <= 0.97 && k > 8) {
                const double tail = ainc * ratio / (1.0 - ratio);
                if (tail <= 1e-6 * std::abs(total) && ++stable >= 3) {
                    if (value) *value = total;
                    return IntegralVerdict::Convergent;
                }
            }
        }
        if ((ratio_up >= 6 || ratio_flat >= 12) &&
            std::abs(total) > 8.0 * std::max(std::abs(first), 1e-300))
            return IntegralVerdict::Divergent;
        if (std::abs(total) > 1e10 * std::max(std::abs(first), 1e-300))
            return IntegralVerdict::Divergent;
        prev_inc = ainc;
    }
    return std::abs(total) > 1e8 * std::max(std::abs(first), 1e-300)
               ? IntegralVerdict::Divergent
               : IntegralVerdict::Inconclusive;
}

/// Convergence verdict for int_{lo}^{inf} f from the growth of the partial
/// integrals up to lo * 4^k.
template <class F>
IntegralVerdict tail_convergence_verdict(const F& f, double lo) {
    double acc = 0.0, prev_inc = -1.0;
    double first_inc = 0.0;
    int shrinking = 0;
    double hi = lo;
    for (int k = 1; k <= 24; ++k) {
        const double next = hi * 4.0;
        double inc;
        try {
            inc = integrate([&](double t) { return f(t); }, hi, next, 1e-8).value;
        } catch (const QuadratureError&) {
            return IntegralVerdict::Inconclusive;
        }
        acc += inc;
        if (k == 1) first_inc = std::abs(inc);
        if (prev_inc >= 0.0) {
            if (std::abs(inc) <= 0.5 * prev_inc + 1e-14 * std::abs(acc)) ++shrinking;
            else shrinking = 0;
            if (shrinking >= 4) return IntegralVerdict::Convergent;
        }
        prev_inc = std::abs(inc);
        hi = next;
    }
    if (prev_inc > 0.9 * first_inc && std::abs(acc) > 4.0 * first_inc)
        return IntegralVerdict::Divergent;
    return prev_inc <= 1e-8 * std::max(std::abs(acc), 1e-300)
               ? IntegralVerdict::Convergent
               : IntegralVerdict::Divergent;
}

}  // namespace canweyl
