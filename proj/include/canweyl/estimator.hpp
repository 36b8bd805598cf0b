#pragma once

// High-energy estimates for the Weyl coefficient: the critical point t^(r)
// solving (m1 m2)(t^) = q^2/(4 r^2), the quantities
//
//   A(r) = sqrt(m1/m2)(t^)          L(r) = A(r) det M(t^)/(m1 m2)(t^)
//
// and the two-sided angle-dependent envelope
//
//   A/K_abs <= |q(re^{i th})| <= K_abs A,   K_abs = (1+s+2/(q sin th))/(1-s)
//   |Re q| <= (1+s+1/(q sin th))/(1-s) A
//   c_im L <= Im q <= (s+2/(q sin th))/(1-s) A,
//   c_im = (q sin th / 2)/(1+|cos th|) (1-s)/(1+s),   s = 1/(1-q)^2 - 1,
//
// valid for q in (0, 1 - 1/sqrt 2).  Also bracket-based weaker bounds, a
// comparison constant between two Hamiltonians, and the representation of
// A(r) through the generalised inverse of x m(x) for the induced string.

#include <cmath>
#include <vector>

#include "canweyl/core.hpp"
#include "canweyl/errors.hpp"
#include "canweyl/hamiltonian.hpp"
#include "canweyl/roots.hpp"
#include "canweyl/strings.hpp"

namespace canweyl {

inline constexpr double q_upper_limit = 1.0 - 0.70710678118654752440;  // 1 - 1/sqrt 2

struct EstimatorConfig {
    double q = 0.2;           // in (0, 1 - 1/sqrt 2)
    double root_tol = 1e-10;  // relative tolerance for t^(r)
    double bracket_growth = 2.0;

    double sigma() const { return 1.0 / ((1.0 - q) * (1.0 - q)) - 1.0; }
    void validate() const {
        if (!(q > 0.0 && q < q_upper_limit))
            throw ParameterOutOfRange("estimator: q outside (0, 1 - 1/sqrt 2)");
    }
};

struct AngleEnvelope {
    double theta;
    double lower_abs, upper_abs;
    double upper_re;
    double lower_im, upper_im;
};

struct EstimateBundle {
    double r;
    double t_crit;
    double A;
    double L;
    double sigma;
    std::vector<AngleEnvelope> envelope;
};

namespace detail {

inline void require_regular_start(const Hamiltonian& h) {
    auto prim = h.primitive();
    const double span = std::isfinite(h.right()) ? h.right() - h.left() : 1.0;
    const Mat2 m = prim(h.left() + span * 1e-9);
    const double tr = m.trace();
    if (tr <= 0.0) return;  // nothing accumulated at the probe; treat as regular
    if (m.m22 <= 1e-12 * tr || m.m11 <= 1e-12 * tr)
        throw IndivisibleStart(
            "estimator: H starts with an indivisible interval of type 0 or pi/2; split it first");
}

}  // namespace detail

/// t^(r): unique solution of (m1 m2)(t) = q^2/(4 r^2); strictly decreasing
/// in r.  Bisection in the internal coordinate u = t - a.
inline double t_crit(const Hamiltonian& h, double r, const EstimatorConfig& cfg = {}) {
    cfg.validate();
    if (!(r > 0.0)) throw DomainError("t_crit: need r > 0");
    detail::require_regular_start(h);
    auto prim = h.primitive();
    const double a = h.left();
    const double target = cfg.q * cfg.q / (4.0 * r * r);
    auto f = [&](double u) {
        const Mat2 m = prim(a + u);
        return m.m11 * m.m22;
    };
    double hi = std::isfinite(h.right()) ? (h.right() - a) : 1.0;
    if (!std::isfinite(h.right())) {
        int guard = 0;
        while (f(hi) < target) {
            hi *= 2.0;
            if (++guard > 4000) throw BracketError("t_crit: m1 m2 does not reach the target");
        }
    } else if (f(hi * (1.0 - 1e-12)) < target) {
        throw BracketError("t_crit: m1 m2 stays below the target on [a,b)");
    }
    double lo = hi;
    int guard = 0;
    while (f(lo) >= target) {
        lo *= 0.5;
        if (++guard > 4000) throw BracketError("t_crit: cannot bracket below");
    }
    const double u = bisect_nondecreasing(f, lo, std::min(hi, 2.0 * lo), target, cfg.root_tol);
    return a + u;
}

/// r^(t) = (q/2) (m1 m2)^{-1/2}(t), the inverse of t^.
inline double r_crit(const Hamiltonian& h, double t, const EstimatorConfig& cfg = {}) {
    cfg.validate();
    auto prim = h.primitive();
    const double p = prim.m1(t) * prim.m2(t);
    if (!(p > 0.0)) throw IndivisibleStart("r_crit: m1 m2 vanishes at t");
    return 0.5 * cfg.q / std::sqrt(p);
}

namespace detail {

inline AngleEnvelope envelope_at(double theta, double q, double sigma, double A, double L) {
    const double st = std::sin(theta);
    if (!(st > 0.0)) throw DomainError("envelope: theta outside (0, pi)");
    const double K_abs = (1.0 + sigma + 2.0 / (q * st)) / (1.0 - sigma);
    AngleEnvelope e;
    e.theta = theta;
    e.upper_abs = K_abs * A;
    e.lower_abs = A / K_abs;
    e.upper_re = (1.0 + sigma + 1.0 / (q * st)) / (1.0 - sigma) * A;
    e.upper_im = (sigma + 2.0 / (q * st)) / (1.0 - sigma) * A;
    e.lower_im = (0.5 * q * st) / (1.0 + std::abs(std::cos(theta))) *
                 (1.0 - sigma) / (1.0 + sigma) * L;
    return e;
}

}  // namespace detail

inline EstimateBundle estimate_bundle(const Hamiltonian& h, double r,
                                      const std::vector<double>& angles,
                                      const EstimatorConfig& cfg = {}) {
    cfg.validate();
    EstimateBundle b;
    b.r = r;
    b.sigma = cfg.sigma();
    b.t_crit = t_crit(h, r, cfg);
    auto prim = h.primitive();
    const Mat2 m = prim(b.t_crit);
    if (!(m.m22 > 0.0)) throw IndivisibleStart("estimate_bundle: m2 vanishes at t^");
    b.A = std::sqrt(m.m11 / m.m22);
    b.L = b.A * m.det() / (m.m11 * m.m22);
    for (double th : angles) b.envelope.push_back(detail::envelope_at(th, cfg.q, b.sigma, b.A, b.L));
    return b;
}

// ---- monotone bracket bounds ----------------------------------------------

struct BracketBounds {
    double A_lower, A_upper;
    double L_lower, L_upper;  // L_upper may be +inf when only t_lo is useful
    AngleEnvelope envelope;   // built from the outer bounds
};

/// Weaker two-sided bounds from an enclosure t_lo < t^(r) < t_hi, using only
/// monotonicity of m1, m2 and det M / m2.  InvalidBracket when t_lo already
/// lies beyond the admissible region, i.e. (q/2)(m1 m2)^{-1/2}(t_lo) < r.
inline BracketBounds bracket_bounds(const Hamiltonian& h, double r, double t_lo,
                                    double t_hi, double theta,
                                    const EstimatorConfig& cfg = {}) {
    cfg.validate();
    auto prim = h.primitive();
    const Mat2 ml = prim(t_lo), mh = prim(t_hi);
    const double q = cfg.q;
    if (ml.m11 * ml.m22 > 0.0 && 0.5 * q / std::sqrt(ml.m11 * ml.m22) < r)
        throw InvalidBracket("bracket_bounds: t_lo exceeds the critical point");
    BracketBounds bb;
    bb.A_lower = (2.0 / q) * r * ml.m11;
    bb.A_upper = mh.m22 > 0.0 ? (2.0 / q) * r * mh.m11 : inf;
    const double up_from_lo = ml.m22 > 0.0 ? (0.5 * q) / (r * ml.m22) : inf;
    bb.A_upper = std::min(bb.A_upper, up_from_lo);
    const double lo_from_hi = mh.m22 > 0.0 ? (0.5 * q) / (r * mh.m22) : 0.0;
    bb.A_lower = std::max(bb.A_lower, lo_from_hi);
    bb.L_lower = ml.m22 > 0.0 ? (2.0 / q) * r * ml.det() / ml.m22 : 0.0;
    bb.L_upper = mh.m22 > 0.0 ? (2.0 / q) * r * mh.det() / mh.m22 : inf;
    AngleEnvelope lo_env = detail::envelope_at(theta, q, cfg.sigma(), bb.A_lower, bb.L_lower);
    AngleEnvelope hi_env = detail::envelope_at(theta, q, cfg.sigma(), bb.A_upper, bb.L_upper);
    bb.envelope = AngleEnvelope{theta, lo_env.lower_abs, hi_env.upper_abs, hi_env.upper_re,
                                lo_env.lower_im, hi_env.upper_im};
    return bb;
}

// ---- comparison of two Hamiltonians ----------------------------------------

struct ComparisonConstant {
    double C;
    double q, q1, q2;
    double sigma, sigma1, sigma2;
    double delta1, delta2;

    /// r0 = max of (q/2)(m1 m2)^{-1/2} at a' for the two Hamiltonians;
    /// r0 = 0 when a' = b.
    static double r0(double m1m2_at_aprime, double m1m2_tilde_at_aprime, double q) {
        const double r1 = 0.5 * q / std::sqrt(m1m2_at_aprime);
        const double r2 = 0.5 * q / std::sqrt(m1m2_tilde_at_aprime);
        return std::max(r1, r2);
    }
};

/// Constant C with |q_H(ir)| <= C |q_Ht(ir)| for r > r0, from bounds
/// tr Mt <= c tr M (both ways) and m1 <= g1 m1t, m2t <= g2 m2 near a.
inline ComparisonConstant comparison_constant(double c1, double c2, double g1, double g2,
                                              double q) {
    if (!(c1 > 0.0 && c2 > 0.0 && g1 > 0.0 && g2 > 0.0))
        throw ParameterOutOfRange("comparison_constant: constants must be positive");
    ComparisonConstant cc;
    cc.q = q;
    cc.q1 = q * std::sqrt(2.0 * c1 * g1);
    cc.q2 = q * std::sqrt(2.0 * c2 * g2);
    if (!(q > 0.0 && std::max({q, cc.q1, cc.q2}) < q_upper_limit))
        throw ParameterOutOfRange("comparison_constant: q max(1, sqrt(2 c g)) must stay below 1 - 1/sqrt 2");
    auto sig = [](double qq) { return 1.0 / ((1.0 - qq) * (1.0 - qq)) - 1.0; };
    cc.sigma = sig(q);
    cc.sigma1 = sig(cc.q1);
    cc.sigma2 = sig(cc.q2);
    auto delta = [&](double qq, double ss) {
        return (1.0 - ss) / (1.0 + ss + 2.0 / qq) * (2.0 / qq);
    };
    cc.delta1 = delta(cc.q1, cc.sigma1);
    cc.delta2 = delta(cc.q2, cc.sigma2);
    const double K = (1.0 + cc.sigma + 2.0 / q) / (1.0 - cc.sigma);
    const double term1 = g1 / cc.delta2 * (2.0 / q) * K;
    const double term2 = g2 / cc.delta1 * (2.0 / q) * K;
    const double term3 = K * K;
    cc.C = std::max({term1, term2, term3});
    return cc;
}

/// A(r) through the associated string: (2r/q) f^-(q^2/4r^2) for
/// f(x) = x m(x).  Agrees with estimate_bundle's A.
inline double a_via_string(const Hamiltonian& h, double r, const EstimatorConfig& cfg = {}) {
    cfg.validate();
    detail::require_regular_start(h);
    KreinString s = string_from_hamiltonian(h);
    MonotoneFunction finv = string_growth_function(s).gen_inverse();
    const double q = cfg.q;
    return (2.0 * r / q) * finv(q * q / (4.0 * r * r));
}

}  // namespace canweyl
