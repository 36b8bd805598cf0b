#pragma once

// Fundamental solution W(t,z) of W' = -z W H J with W(a,z) = I, Weyl discs,
// and the certified Weyl coefficient obtained from the nested-disc limit.
//
// The transfer matrix over a sub-interval is approximated by
// exp(-z (M(t2)-M(t1)) J), which is exact when H is constant there and
// second order otherwise; steps are bisected adaptively against the
// two-half-steps product.  All factors are exponentials of trace-free
// matrices, so det W == 1 up to rounding by construction.

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "canweyl/core.hpp"
#include "canweyl/errors.hpp"
#include "canweyl/hamiltonian.hpp"
#include "canweyl/quadrature.hpp"
#include "canweyl/roots.hpp"

namespace canweyl {

struct WeylDisc {
    complex centre;
    double radius;

    bool contains(complex w, double slack = 0.0) const {
        return std::abs(w - centre) <= radius + slack;
    }
};

/// A computed complex value together with a radius certifying the enclosure.
struct CertifiedValue {
    complex value;
    double radius;
};

struct SolverOptions {
    double step_rel_tol = 1e-12;  // per-step relative tolerance
    int max_depth = 48;
    double grow_factor = 2.0;     // geometric advance of the disc parameter
    double trace_growth_cap = 1e6;
    double eps_target = 1e-8;
};

namespace detail {

inline CMat2 transfer_exponential(const Mat2& dM, complex z) {
    // exp(-z dM J); dM J is trace-free for symmetric dM
    const Mat2 g = dM * mat2_J;
    return expm_tracefree((-z) * g);
}

class TransferStepper {
public:
    TransferStepper(const Hamiltonian& h, complex z, const SolverOptions& opt,
                    bool record = false)
        : h_(h), prim_(h.primitive()), z_(z), opt_(opt), record_(record) {}

    void reset(double t) {
        t_ = t;
        w_ = CMat2{1.0, 0.0, 0.0, 1.0};
        err_acc_ = 0.0;
        checkpoints_.clear();
        if (record_) checkpoints_.push_back({t_, w_});
    }

    void advance(double t2) {
        if (t2 <= t_) return;
        std::vector<double> ks = h_.knots_in(t_, t2);
        double s1 = t_;
        for (double k : ks) {
            advance_segment(s1, k);
            s1 = k;
        }
        advance_segment(s1, t2);
        t_ = t2;
    }

    double t() const { return t_; }
    const CMat2& W() const { return w_; }
    double accumulated_error() const { return err_acc_; }
    const std::vector<std::pair<double, CMat2>>& checkpoints() const { return checkpoints_; }

    Mat2 delta_M(double s1, double s2) const {
        if (prim_.source == PrimitiveSource::Exact) return prim_(s2) - prim_(s1);
        auto comp = [&](auto pick) {
            return integrate([&](double s) { return pick(h_.value(s)); }, s1, s2, 1e-12).value;
        };
        const double a1 = comp([](const Mat2& m) { return m.m11; });
        const double a2 = comp([](const Mat2& m) { return m.m22; });
        const double a3 = comp([](const Mat2& m) { return m.m12; });
        return {a1, a3, a3, a2};
    }

    /// Transfer factor over [s1,s2] continued from a checkpoint (used by the
    /// quadrature route for nabla).
    CMat2 factor(double s1, double s2) const {
        return transfer_exponential(delta_M(s1, s2), z_);
    }

private:
    void push(const CMat2& f, double t_right) {
        w_ = w_ * f;
        if (record_) checkpoints_.push_back({t_right, w_});
    }

    void advance_segment(double s1, double s2) {
        if (s2 <= s1) return;
        if (h_.constant_between_knots()) {
            push(factor(s1, s2), s2);  // exact on a constant panel
            return;
        }
        // seed sub-steps on the oscillation scale |z| * accumulated trace
        const Mat2 dM = delta_M(s1, s2);
        const double scale = std::abs(z_) * dM.trace();
        int chunks = scale > 0.5 ? (int)std::min(1e7, std::ceil(scale / 0.5)) : 1;
        const double len = (s2 - s1) / chunks;
        for (int i = 0; i < chunks; ++i) {
            const double a = s1 + i * len;
            const double b = (i + 1 == chunks) ? s2 : a + len;
            refine(a, b, opt_.max_depth);
        }
    }

    void refine(double s1, double s2, int depth) {
        const CMat2 coarse = factor(s1, s2);
        const double mid = 0.5 * (s1 + s2);
        const CMat2 fine = factor(s1, mid) * factor(mid, s2);
        const double err = max_abs(coarse - fine);
        const double tol = opt_.step_rel_tol * std::max(1.0, max_abs(fine));
        if (err <= tol || depth <= 0) {
            if (err > 16.0 * tol && depth <= 0)
                throw StepFailure("transfer step cannot meet tolerance");
            // second-order scheme: the fine product is off by about err/3
            err_acc_ += err / (3.0 * std::max(1.0, max_abs(fine)));
            push(factor(s1, mid), mid);
            push(factor(mid, s2), s2);
            return;
        }
        refine(s1, mid, depth - 1);
        refine(mid, s2, depth - 1);
    }

    const Hamiltonian& h_;
    Primitive prim_;
    complex z_;
    SolverOptions opt_;
    bool record_;
    double t_ = 0.0;
    CMat2 w_{1.0, 0.0, 0.0, 1.0};
    double err_acc_ = 0.0;
    std::vector<std::pair<double, CMat2>> checkpoints_;
};

inline CMat2 nabla_from_W(const CMat2& w, complex z) {
    const CMat2 lhs = w * mat2_J * adjoint(w) - to_complex(mat2_J);
    const complex den = complex(0.0, 2.0 * z.imag());
    return {lhs.m11 / den, lhs.m12 / den, lhs.m21 / den, lhs.m22 / den};
}

/// Series bound on |W(t0,z) - I| entrywise: |z| M+ |J| / (1 - |z| m+).
/// Returns the maximal entry, or +inf when |z| m+ >= 1.
inline double start_truncation_bound(const Mat2& M_at, double zabs) {
    const double m1 = std::max(M_at.m11, 0.0), m2 = std::max(M_at.m22, 0.0);
    const double root = std::sqrt(m1 * m2);
    const double mplus = 2.0 * root;
    if (zabs * mplus >= 1.0) return inf;
    const double top = std::max(std::max(m1, m2), root);
    return zabs * top / (1.0 - zabs * mplus);
}

}  // namespace detail

/// W(t,z); |det W - 1| stays at rounding level.  For Hamiltonians whose
/// discontinuities accumulate at a, integration starts at a point where the
/// omitted prefix transfer is within `tol` of I entrywise.
inline CMat2 fundamental_solution(const Hamiltonian& h, double t, complex z,
                                  double tol = 1e-11) {
    if (!(t >= h.left()) || !(t < h.right())) throw DomainError("fundamental_solution: t outside [a,b)");
    SolverOptions opt;
    opt.step_rel_tol = tol;
    detail::TransferStepper st(h, z, opt);
    double start = h.left();
    if (h.knots_accumulate_left()) {
        auto prim = h.primitive();
        const double zabs = std::abs(z);
        const double target = std::min(tol, 1e-12);
        auto bound_at = [&](double u) {
            return detail::start_truncation_bound(prim(h.left() + u), zabs);
        };
        if (bound_at(t - h.left()) < target)
            return CMat2{1.0, 0.0, 0.0, 1.0};  // whole prefix within tolerance of I
        start = h.left() + bisect_nondecreasing(bound_at, 0.0, t - h.left(), target, 1e-13);
    }
    st.reset(start);
    st.advance(t);
    return st.W();
}

/// nabla(t,z) = (W J W* - J) / (2i Im z), Hermitian and PSD for z off the
/// real axis.
inline CMat2 nabla(const Hamiltonian& h, double t, complex z, double tol = 1e-11) {
    if (z.imag() == 0.0) throw DomainError("nabla: z must be non-real");
    return detail::nabla_from_W(fundamental_solution(h, t, z, tol), z);
}

/// Same quantity through the defining integral int_a^t W H W* ds, evaluated
/// with per-step Gauss nodes on the recorded transfer checkpoints.
inline CMat2 nabla_quadrature(const Hamiltonian& h, double t, complex z,
                              double tol = 1e-11) {
    if (z.imag() == 0.0) throw DomainError("nabla: z must be non-real");
    SolverOptions opt;
    opt.step_rel_tol = tol;
    detail::TransferStepper st(h, z, opt, /*record=*/true);
    st.reset(h.left());
    st.advance(t);
    static const double gl_x[5] = {-0.906179845938664, -0.5384693101056831, 0.0,
                                   0.5384693101056831, 0.906179845938664};
    static const double gl_w[5] = {0.23692688505618908, 0.47862867049936647,
                                   0.5688888888888889, 0.47862867049936647,
                                   0.23692688505618908};
    CMat2 acc{};
    const auto& cps = st.checkpoints();
    for (std::size_t i = 0; i + 1 < cps.size(); ++i) {
        const double a = cps[i].first, b = cps[i + 1].first;
        if (b <= a) continue;
        const CMat2& wa = cps[i].second;
        const double c = 0.5 * (a + b), hl = 0.5 * (b - a);
        for (int j = 0; j < 5; ++j) {
            const double s = c + hl * gl_x[j];
            const CMat2 ws = wa * st.factor(a, s);
            const CMat2 term = ws * h.value(s) * adjoint(ws);
            acc = acc + (gl_w[j] * hl) * term;
        }
    }
    return acc;
}

/// The Weyl disc at (t,z): image of the closed upper half-plane under the
/// Moebius map of W(t,z).  DegenerateDisc when the lower-right entry of
/// nabla vanishes, i.e. h2 == 0 a.e. on (a,t).
inline WeylDisc weyl_disc(const Hamiltonian& h, double t, complex z, double tol = 1e-11) {
    if (!(z.imag() > 0.0)) throw DomainError("weyl_disc: z must lie in the upper half-plane");
    const CMat2 nab = nabla(h, t, z, tol);
    const double a = nab.m22.real();
    if (!(a > 0.0)) throw DegenerateDisc("weyl_disc: degenerate disc, h2 vanishes on (a,t)");
    const complex b = nab.m12;
    const double r = 1.0 / (2.0 * z.imag() * a);
    return {b / a + complex(0.0, r), r};
}

namespace detail {

inline WeylDisc disc_from_W(const CMat2& w, complex z) {
    const CMat2 nab = nabla_from_W(w, z);
    const double a = nab.m22.real();
    if (!(a > 0.0)) return {complex(0.0, 0.0), inf};
    const double r = 1.0 / (2.0 * z.imag() * a);
    return {nab.m12 / a + complex(0.0, r), r};
}

}  // namespace detail

/// Certified value of q_H(z): advances t geometrically until the Weyl disc
/// radius (plus start-truncation and stepping slack) meets eps; the exact
/// coefficient lies in the returned disc.  Lower half-plane values come from
/// the symmetry q_H(conj z) = conj q_H(z).
inline CertifiedValue weyl_coefficient(const Hamiltonian& h, complex z,
                                       double eps_target = 1e-8,
                                       SolverOptions opt = {}) {
    if (z.imag() == 0.0) throw DomainError("weyl_coefficient: z must be non-real");
    if (z.imag() < 0.0) {
        CertifiedValue c = weyl_coefficient(h, std::conj(z), eps_target, opt);
        return {std::conj(c.value), c.radius};
    }
    if (!h.limit_point())
        throw NotSupported("weyl_coefficient: Hamiltonian is not flagged limit-point at b");
    opt.eps_target = eps_target;

    auto prim = h.primitive();
    const double a = h.left();
    const double zabs = std::abs(z);

    // initial truncation point for discontinuities accumulating at a
    double start = a;
    double start_bound = 0.0;
    double start_target = std::min(1e-10, 1e-4 * eps_target);
    auto pick_start = [&](double target) {
        double hi = 1.0;
        while (detail::start_truncation_bound(prim(a + hi), zabs) < target) hi *= 2.0;
        return a + bisect_nondecreasing(
                       [&](double u) {
                           return detail::start_truncation_bound(prim(a + u), zabs);
                       },
                       0.0, hi, target, 1e-13);
    };
    if (h.knots_accumulate_left()) {
        start = pick_start(start_target);
        start_bound = detail::start_truncation_bound(prim(start), zabs);
    }

    for (int attempt = 0; attempt < 6; ++attempt) {
        detail::TransferStepper st(h, z, opt);
        st.reset(start);

        // first probe where the transfer is order one
        double u0;
        {
            auto mplus = [&](double u) {
                const Mat2 m = prim(start + u);
                return 2.0 * std::sqrt(std::max(0.0, m.m11 * m.m22));
            };
            auto trsum = [&](double u) { return prim.trace(start + u); };
            double hi = std::max(1e-8, (start - a) + 1e-8);
            while (mplus(hi) * zabs < 0.2 && trsum(hi) * zabs < 0.2 && hi < 1e12) hi *= 2.0;
            try {
                u0 = bisect_nondecreasing(mplus, 0.0, hi, 0.2 / zabs, 1e-6);
            } catch (const BracketError&) {
                // one diagonal entry vanishes so far; probe on the trace instead
                u0 = bisect_nondecreasing(trsum, 0.0, hi, 0.2 / zabs, 1e-6);
            }
            if (u0 <= 0.0) u0 = hi * 1e-6;
        }

        const double trace0 = std::max(prim.trace(start + u0), 1e-300);
        WeylDisc best{complex(0.0, 0.0), inf};
        int tighten = 0;  // 1: smaller omitted prefix, 2: tighter stepping
        double u = u0;
        while (true) {
            st.advance(start + u);
            WeylDisc d = detail::disc_from_W(st.W(), z);
            if (d.radius < best.radius) best = d;
            if (std::isfinite(best.radius)) {
                // slack: start truncation enters through a Moebius distortion
                // of the computed disc, stepping error through the W entries
                const double reach = std::abs(best.centre) + best.radius;
                const double mob =
                    start_bound <= 0.0
                        ? 0.0
                        : start_bound * (1.0 + reach) * (1.0 + reach) /
                              std::max(1e-300, 1.0 - start_bound * (1.0 + reach));
                const double num = 2.0 * st.accumulated_error() * (1.0 + reach);
                const double total = best.radius + mob + num;
                if (total <= eps_target) {
                    if (mob > 0.25 * eps_target && h.knots_accumulate_left()) {
                        tighten = 1;  // redo with a smaller omitted prefix
                        break;
                    }
                    return {best.centre, total};
                }
                if (best.radius <= 0.1 * eps_target && num > 0.5 * eps_target) {
                    tighten = 2;  // stepping slack dominates; retry tighter
                    break;
                }
                if (prim.trace(start + u) > opt.trace_growth_cap * trace0)
                    throw SlowShrink(
                        "weyl_coefficient: disc radius stagnates at the truncation cap",
                        total);
            } else if (prim.trace(start + u) > opt.trace_growth_cap * trace0) {
                throw DegenerateDisc("weyl_coefficient: disc never became definite");
            }
            u *= opt.grow_factor;
            if (start + u >= h.right()) u = 0.5 * (u / opt.grow_factor + (h.right() - start));
        }
        if (tighten == 0) break;
        if (tighten == 1) {
            start_target *= 1e-3;
            start = pick_start(start_target);
            start_bound = detail::start_truncation_bound(prim(start), zabs);
        } else {
            opt.step_rel_tol *= 1e-3;
            if (opt.step_rel_tol < 1e-15) opt.step_rel_tol = 1e-15;
        }
    }
    throw StepFailure("weyl_coefficient: could not control start truncation");
}

}  // namespace canweyl
