#pragma once

// Krein strings (length + non-decreasing left-continuous mass function),
// the correspondence with diagonal canonical systems, the principal
// Titchmarsh-Weyl coefficient, a growth estimate through the generalised
// inverse of x * m(x), and two-sided Sturm-Liouville envelopes.

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "canweyl/core.hpp"
#include "canweyl/errors.hpp"
#include "canweyl/hamiltonian.hpp"
#include "canweyl/monotone.hpp"
#include "canweyl/quadrature.hpp"
#include "canweyl/weyl.hpp"

namespace canweyl {

struct KreinString {
    double length = inf;     // L in [0, inf]
    MonotoneFunction mass;   // m on [0, L), m(0) = 0, left-continuous

    double total_mass() const { return mass.sup(); }
};

/// The string induced by a Hamiltonian: L = lim m1, mass = m2 o m1^-.
/// Only the diagonal of the primitive enters.  Exact for piecewise-constant
/// fields; numeric otherwise.
inline KreinString string_from_hamiltonian(const Hamiltonian& h) {
    if (const auto* pn = h.panels()) {
        std::vector<MonotoneFunction::Segment> segs;
        double X = 0.0;       // mass-coordinate m1
        double V = 0.0;       // accumulated m2
        double pending = 0.0; // h2-mass collected over h1==0 panels (jump)
        double L = inf;
        for (std::size_t i = 0; i + 1 < pn->edges.size(); ++i) {
            const double len = pn->edges[i + 1] - pn->edges[i];
            const double h1 = pn->values[i].m11, h2 = pn->values[i].m22;
            const bool vanishing_h1 = h1 <= 1e-12 * (h1 + h2);
            if (!std::isfinite(len)) {
                if (vanishing_h1) { L = X; break; }         // trailing pi/2 part
                segs.push_back({X, V + pending, h2 / h1});  // infinite segment
                pending = 0.0;
                X = inf;
                break;
            }
            if (vanishing_h1) {
                pending += h2 * len;
                continue;
            }
            segs.push_back({X, V + pending, h2 / h1});
            V += pending + (h2 / h1) * (h1 * len);
            pending = 0.0;
            X += h1 * len;
        }
        if (std::isfinite(L) || std::isfinite(X)) L = std::isfinite(L) ? L : X;
        else L = inf;
        KreinString s;
        s.length = L;
        s.mass = MonotoneFunction::piecewise(0.0, L, 0.0, std::move(segs));
        return s;
    }
    auto prim = h.primitive();
    const double a = h.left(), b = h.right();
    auto m1 = [prim, a](double t) { return prim.m1(t); };
    double L;
    if (std::isfinite(b)) {
        L = m1(b);
    } else {
        // lim m1; finite only when h1 vanishes on a right tail
        double probe = 1.0, prev = -1.0;
        L = inf;
        for (int i = 0; i < 60; ++i, probe *= 4.0) {
            const double v = m1(a + probe);
            if (prev >= 0.0 && v > prev * (1.0 + 1e-13) + 1e-300) prev = v;
            else if (prev >= 0.0 && v <= prev * (1.0 + 1e-13)) { L = v; break; }
            else prev = v;
            if (v > 1e12) break;
        }
    }
    auto self = prim;
    auto m1_inv = [self, a, b](double x) {
        double hi = std::isfinite(b) ? b : 1.0;
        if (!std::isfinite(b)) {
            while (self.m1(a + hi) < x && hi < 1e300) hi *= 2.0;
            hi = a + hi;
        }
        return bisect_nondecreasing([&](double t) { return self.m1(t); }, a, hi, x, 1e-15);
    };
    auto mass_fn = [self, m1_inv](double x) { return self.m2(m1_inv(x)); };
    KreinString s;
    s.length = L;
    double sup = inf;
    if (std::isfinite(L)) {
        try {
            sup = mass_fn(L * (1.0 - 1e-12));
        } catch (const Error&) {
            sup = inf;
        }
    }
    s.mass = MonotoneFunction::from_callable(0.0, L, mass_fn, sup);
    return s;
}

/// Whether the induced string is regular (finite length and finite mass),
/// equivalently whether h1 vanishes on an interval (c, b).
inline bool string_is_regular(const KreinString& s) {
    return std::isfinite(s.length) && std::isfinite(s.total_mass());
}

/// The trace-normed diagonal Hamiltonian on [0,inf) with the given string:
/// H = diag(d, 1-d), d = derivative of the generalised inverse of x + m(x).
inline Hamiltonian hamiltonian_from_string(const KreinString& s) {
    const double L = s.length;
    if (s.mass.exact()) {
        // each linear mass piece of slope sigma over x-length dx becomes a
        // panel of t-length (1+sigma) dx with h1 = 1/(1+sigma); each jump J
        // becomes a panel of t-length J with h1 = 0
        std::vector<double> cuts;
        std::vector<Mat2> vals;
        double T = 0.0;
        double prev_left = 0.0;
        const auto& segs = s.mass.segments();
        auto push_panel = [&](double len, double h1) {
            if (len <= 0.0) return;
            if (!vals.empty()) cuts.push_back(T);
            vals.push_back(Mat2{h1, 0.0, 0.0, 1.0 - h1});
            T += len;
        };
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const double jump = segs[i].v - prev_left;
            if (std::isfinite(segs[i].v) && jump > 0.0) push_panel(jump, 0.0);
            if (!std::isfinite(segs[i].v)) break;
            const double right = (i + 1 < segs.size()) ? segs[i + 1].x : L;
            const double dx = (std::isfinite(right) ? right : inf) - segs[i].x;
            const double slope = segs[i].slope;
            if (!std::isfinite(dx)) {
                push_panel(inf, 1.0 / (1.0 + slope));
                prev_left = inf;
                break;
            }
            push_panel((1.0 + slope) * dx, 1.0 / (1.0 + slope));
            prev_left = segs[i].v + slope * dx;
        }
        if (std::isfinite(L) && (vals.empty() || T < inf)) {
            // beyond the string: m~ jumps to +inf, its inverse plateaus at L
            if (std::isfinite(T)) push_panel(inf, 0.0);
        }
        if (vals.empty()) push_panel(inf, 0.0);
        return Hamiltonian::piecewise_constant(0.0, cuts, vals);
    }
    // numeric path: m~(x) = x + m(x), strictly increasing; exact primitive
    // M(t) = diag(m~^-(t), t - m~^-(t))
    auto mass = s.mass;
    auto mt = [mass, L](double x) {
        if (x < L) return x + mass(x);
        return inf;
    };
    auto mt_inv = [mt, L](double t) {
        double hi = std::isfinite(L) ? L : 1.0;
        if (!std::isfinite(L)) {
            while (mt(hi) < t && hi < 1e300) hi *= 2.0;
        }
        return bisect_nondecreasing(mt, 0.0, hi, t, 1e-15);
    };
    auto prim = [mt_inv](double t) {
        const double x = t > 0.0 ? mt_inv(t) : 0.0;
        return Mat2{x, 0.0, 0.0, t - x};
    };
    auto h1 = [mt_inv, mass, L](double t) {
        const double x = mt_inv(t);
        if (x >= L) return 0.0;
        const double dx = std::max(1e-7 * (std::abs(x) + 1e-7), 1e-12);
        double lo = std::max(0.0, x - dx), hi = std::min(x + dx, std::isfinite(L) ? L : x + dx);
        if (hi <= lo) return 0.0;
        const double slope = (mass(hi) - mass(lo)) / (hi - lo);
        return 1.0 / (1.0 + slope);
    };
    Hamiltonian::Parts parts;
    parts.iv = {0.0, inf};
    parts.eval = [h1](double t) {
        const double d = h1(t);
        return Mat2{d, 0.0, 0.0, 1.0 - d};
    };
    parts.prim = prim;
    parts.limit_point = true;
    return Hamiltonian(std::move(parts));
}

/// f(x) = x m(x) on [0,L), capped by L m(L-) at x = L and +inf beyond;
/// the growth function whose generalised inverse drives the estimates.
inline MonotoneFunction string_growth_function(const KreinString& s) {
    auto mass = s.mass;
    const double L = s.length;
    const double ml = s.total_mass();
    auto fn = [mass, L, ml](double x) -> double {
        if (x < L) return x * mass(x);
        if (std::isfinite(L) && std::isfinite(ml) && x == L) return L * ml;
        return inf;
    };
    // the +inf tail past x = L is explicit, so the supremum counts as attained
    return MonotoneFunction::from_callable(0.0, std::isfinite(L) ? inf : L, fn, inf,
                                           /*sup_attained=*/std::isfinite(L));
}

/// Principal Titchmarsh-Weyl coefficient of the string at w off [0, inf):
/// q_S(w) = q_H(sqrt w)/sqrt w with the root in the upper half-plane.
inline CertifiedValue string_coefficient(const KreinString& s, complex w,
                                         double eps = 1e-8) {
    if (w.imag() == 0.0 && w.real() >= 0.0)
        throw DomainError("string_coefficient: w must avoid [0, inf)");
    complex z = std::sqrt(w);
    if (z.imag() < 0.0) z = -z;
    if (z.imag() == 0.0) z = complex(0.0, std::sqrt(-w.real()));
    Hamiltonian h = hamiltonian_from_string(s);
    CertifiedValue q = weyl_coefficient(h, z, eps * std::abs(z));
    return {q.value / z, q.radius / std::abs(z)};
}

struct KasaharaEstimate {
    double f_inv_value;  // f^-(1/y)
    double ratio;        // q_S(-y) / f^-(1/y)
    double band_lo, band_hi;
    bool within_band;
};

/// Universal two-sided band for q_S(-y) against f^-(1/y).  With
/// K = (1+sigma+2/q)/(1-sigma) the envelope |q_H(ir)| in [A/K, K A] and
/// A(r) = (2r/q) f^-(q^2/4r^2) give, via f^-(cu) in [c f^-(u), f^-(u)] for
/// c = q^2/4 <= 1 (valid since f(x)/x is non-decreasing),
///     q/(2K) <= q_S(-y)/f^-(1/y) <= 2K/q.
inline void kasahara_band(double q, double& lo, double& hi) {
    const double sigma = 1.0 / ((1.0 - q) * (1.0 - q)) - 1.0;
    const double K = (1.0 + sigma + 2.0 / q) / (1.0 - sigma);
    lo = q / (2.0 * K);
    hi = 2.0 * K / q;
}

inline KasaharaEstimate kasahara_estimate(const KreinString& s, double y,
                                          double q = 0.2, double eps = 1e-8) {
    if (!(y > 0.0)) throw DomainError("kasahara_estimate: need y > 0");
    MonotoneFunction f = string_growth_function(s);
    MonotoneFunction finv = f.gen_inverse();
    const double fv = finv(1.0 / y);
    const double qs = string_coefficient(s, complex(-y, 0.0), eps).value.real();
    KasaharaEstimate out;
    out.f_inv_value = fv;
    out.ratio = qs / fv;
    kasahara_band(q, out.band_lo, out.band_hi);
    out.within_band = out.ratio >= out.band_lo && out.ratio <= out.band_hi;
    return out;
}

// ---- string growth criterion ----------------------------------------------

/// Verdict for int_0^{x0} g(1 / int_0^x m) dx, the string form of the
/// weighted-integrability criterion for the principal spectral measure.
inline IntegralVerdict string_kac_criterion(const KreinString& s,
                                            const std::function<double(double)>& g,
                                            double x0 = -1.0) {
    auto mass = s.mass;
    const double L = s.length;
    if (!(mass(std::min(L, 1e-9) * 0.5) >= 0.0))
        throw DomainError("string_kac_criterion: mass not evaluable near 0");
    double hi = x0 > 0.0 ? x0 : (std::isfinite(L) ? 0.5 * L : 1.0);
    auto inner = [mass](double x) {
        return integrate([&](double u) { return mass(u); }, 0.0, x, 1e-10).value;
    };
    auto integrand = [g, inner](double x) { return g(1.0 / inner(x)); };
    IntegralVerdict v = endpoint_refinement_verdict(integrand, 0.0, hi);
    if (v == IntegralVerdict::Inconclusive)
        throw InconclusiveNearEndpoint("string_kac_criterion: refinement did not stabilise");
    return v;
}

struct SandwichCheck {
    double lower, middle, upper;
    bool holds;
};

/// For non-increasing F and 0 < t_lo < t_hi < b, with H induced by the string,
///   (1/2) int_{2 m1(t_lo)}^{2 m1(t_hi)} F(int_0^x m) dx
///     <= int_{t_lo}^{t_hi} F((m1 m2)(t)) h1(t) dt
///     <= int_{m1(t_lo)}^{m1(t_hi)} F(int_0^x m) dx.
inline SandwichCheck mass_integral_sandwich(const KreinString& s,
                                            const std::function<double(double)>& F,
                                            double t_lo, double t_hi) {
    Hamiltonian h = hamiltonian_from_string(s);
    auto prim = h.primitive();
    auto mass = s.mass;
    auto inner = [mass](double x) {
        return integrate([&](double u) { return mass(u); }, 0.0, x, 1e-11).value;
    };
    auto outer = [&](double x) { return F(inner(x)); };
    const double x_lo = prim.m1(t_lo), x_hi = prim.m1(t_hi);
    SandwichCheck c;
    c.middle = integrate([&](double t) {
                   const Mat2 m = prim(t);
                   return F(m.m11 * m.m22) * h.value(t).m11;
               }, t_lo, t_hi, 1e-9).value;
    c.upper = integrate(outer, x_lo, x_hi, 1e-9).value;
    c.lower = 0.5 * integrate(outer, 2.0 * x_lo, 2.0 * x_hi, 1e-9).value;
    c.holds = c.lower <= c.middle * (1.0 + 1e-7) + 1e-12 &&
              c.middle <= c.upper * (1.0 + 1e-7) + 1e-12;
    return c;
}

// ---- Sturm-Liouville envelopes ---------------------------------------------

struct SLProblem {
    Interval iv;
    std::function<double(double)> p;         // > 0
    std::function<double(double)> q;         // potential (may be null for 0)
    std::function<double(double)> w;         // > 0
    std::optional<double> lambda0;           // lower bound of the Neumann operator
};

struct SlEnvelope {
    double kappa;
    double x_hat;      // solution of (int w)(int 1/p) = kappa^2 / r
    double B;          // (r/kappa) int_a^{x_hat} w
    double B_alt;      // kappa / int_a^{x_hat} 1/p (must agree with B)
    double C1, C2;     // angle constants; C1 = 1/C2
    double lower, upper;
    // potential case
    bool potential_case = false;
    double x0 = 0.0, r0 = 0.0;
    double v_min = 1.0, v_max = 1.0;
};

namespace detail {

// adaptive RK4 with step doubling on u' = A(x) u for a real 2-vector
template <class RHS>
void rk4_adaptive(const RHS& rhs, double x0, double x1, double u[2], double tol) {
    auto step = [&](double x, double h, const double in[2], double out[2]) {
        double k1[2], k2[2], k3[2], k4[2], tmp[2];
        rhs(x, in, k1);
        for (int i = 0; i < 2; ++i) tmp[i] = in[i] + 0.5 * h * k1[i];
        rhs(x + 0.5 * h, tmp, k2);
        for (int i = 0; i < 2; ++i) tmp[i] = in[i] + 0.5 * h * k2[i];
        rhs(x + 0.5 * h, tmp, k3);
        for (int i = 0; i < 2; ++i) tmp[i] = in[i] + h * k3[i];
        rhs(x + h, tmp, k4);
        for (int i = 0; i < 2; ++i)
            out[i] = in[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    };
    double x = x0;
    double h = (x1 - x0) / 64.0;
    int guard = 0;
    while (x < x1) {
        if (++guard > 2000000) throw IvpFailure("rk4: step count exceeded");
        if (x + h > x1) h = x1 - x;
        double one[2], two[2], half[2];
        step(x, h, u, one);
        step(x, 0.5 * h, u, half);
        step(x + 0.5 * h, 0.5 * h, half, two);
        const double err = std::max(std::abs(one[0] - two[0]), std::abs(one[1] - two[1]));
        const double scale = std::max({std::abs(two[0]), std::abs(two[1]), 1.0});
        if (err <= tol * scale) {
            u[0] = two[0];
            u[1] = two[1];
            x += h;
            if (err < 0.01 * tol * scale) h *= 2.0;
        } else {
            h *= 0.5;
            if (h <= 1e-16 * (std::abs(x) + 1.0)) throw IvpFailure("rk4: step underflow");
        }
    }
}

}  // namespace detail

/// Two-sided high-energy envelope for the Dirichlet coefficient of
/// -(p y')' + q y = lambda w y.  Without a potential the bounds hold for all
/// r > 0; with one they hold for r >= r0 at argument lambda0 + r e^{i theta}.
inline SlEnvelope sl_envelope(const SLProblem& prob, double r, double theta,
                              double kappa = 0.1, double x0_seed = -1.0) {
    if (!(kappa > 0.0 && kappa < 0.5 - 0.5 / std::sqrt(2.0)))
        throw ParameterOutOfRange("sl_envelope: kappa outside (0, 1/2 - 1/(2 sqrt 2))");
    if (!(theta > 0.0 && theta < 2.0 * M_PI))
        throw DomainError("sl_envelope: theta outside (0, 2 pi)");
    const double a = prob.iv.a;
    const double sigma = 1.0 / ((1.0 - 2.0 * kappa) * (1.0 - 2.0 * kappa)) - 1.0;
    const double C2 = (1.0 + sigma + 1.0 / (kappa * std::sin(0.5 * theta))) / (1.0 - sigma);

    const bool has_q = static_cast<bool>(prob.q);
    auto Iw = [&](double x) {
        return integrate(prob.w, a, x, 1e-11).value;
    };
    auto Ip = [&](double x) {
        return integrate([&](double t) { return 1.0 / prob.p(t); }, a, x, 1e-11).value;
    };
    auto product = [&](double x) { return Iw(x) * Ip(x); };
    auto solve_xhat = [&](double rr) {
        double hi = std::isfinite(prob.iv.b) ? prob.iv.b : 1.0;
        if (!std::isfinite(prob.iv.b))
            while (product(a + hi) < kappa * kappa / rr && hi < 1e300) hi *= 2.0;
        else
            hi = prob.iv.b;
        return bisect_nondecreasing([&](double x) { return product(x); }, a,
                                    std::isfinite(prob.iv.b) ? hi : a + hi,
                                    kappa * kappa / rr, 1e-13);
    };

    SlEnvelope env;
    env.kappa = kappa;
    env.C2 = C2;
    env.C1 = 1.0 / C2;

    if (!has_q) {
        env.x_hat = solve_xhat(r);
        env.B = (r / kappa) * Iw(env.x_hat);
        env.B_alt = kappa / Ip(env.x_hat);
        env.lower = env.C1 * env.B;
        env.upper = env.C2 * env.B;
        return env;
    }

    if (!prob.lambda0)
        throw DomainError("sl_envelope: potential case needs lambda0 below the Neumann spectrum");
    const double l0 = *prob.lambda0;

    // x0 with int 1/p <= 1/3 and int |q - l0 w| <= 1/3 (halving search)
    double x0 = x0_seed > a ? x0_seed
                            : (std::isfinite(prob.iv.b) ? 0.5 * (a + prob.iv.b) : a + 1.0);
    auto qint = [&](double x) {
        return integrate([&](double t) { return std::abs(prob.q(t) - l0 * prob.w(t)); }, a, x,
                         1e-11).value;
    };
    bool ok = false;
    for (int i = 0; i < 60; ++i) {
        if (Ip(x0) <= 1.0 / 3.0 && qint(x0) <= 1.0 / 3.0) { ok = true; break; }
        x0 = a + 0.5 * (x0 - a);
    }
    if (!ok) throw PotentialTooLarge("sl_envelope: no x0 satisfies both 1/3 bounds");
    if (x0_seed > a && (Ip(x0_seed) > 1.0 / 3.0 || qint(x0_seed) > 1.0 / 3.0))
        throw PotentialTooLarge("sl_envelope: supplied x0 violates the 1/3 bounds");

    // gauge solution v: -(p v')' + q v = l0 w v, v(a) = 1, (p v')(a) = 0
    double u[2] = {1.0, 0.0};
    double vmin = 1.0, vmax = 1.0;
    const int nrec = 256;
    for (int i = 0; i < nrec; ++i) {
        const double xa = a + (x0 - a) * i / nrec;
        const double xb = a + (x0 - a) * (i + 1) / nrec;
        detail::rk4_adaptive(
            [&](double x, const double in[2], double out[2]) {
                out[0] = in[1] / prob.p(x);
                out[1] = (prob.q(x) - l0 * prob.w(x)) * in[0];
            },
            xa, xb, u, 1e-11);
        vmin = std::min(vmin, u[0]);
        vmax = std::max(vmax, u[0]);
    }
    if (!(vmin >= 0.5 - 1e-9 && vmax <= 1.5 + 1e-9))
        throw IvpFailure("sl_envelope: gauge solution leaves [1/2, 3/2] on [a, x0]");

    env.potential_case = true;
    env.x0 = x0;
    env.v_min = vmin;
    env.v_max = vmax;
    env.r0 = 9.0 * kappa * kappa / (Iw(x0) * Ip(x0));
    if (r < env.r0)
        throw ParameterOutOfRange("sl_envelope: r below the validity threshold r0");
    env.x_hat = solve_xhat(9.0 * r);
    env.B = (9.0 * r / kappa) * Iw(env.x_hat);
    env.B_alt = kappa / Ip(env.x_hat);
    env.lower = env.C1 / 36.0 * env.B;
    env.upper = 9.0 * env.C2 / 4.0 * env.B;
    return env;
}

/// Dirichlet coefficient of -(p y')' = lambda w y through the induced
/// diagonal canonical system: q_D(lambda) = sqrt(lambda) q_H(sqrt(lambda)).
inline CertifiedValue sl_dirichlet_q(const SLProblem& prob, complex lambda,
                                     double eps = 1e-8) {
    if (prob.q) throw NotSupported("sl_dirichlet_q: direct route requires q == 0");
    complex z = std::sqrt(lambda);
    if (z.imag() < 0.0) z = -z;
    if (z.imag() == 0.0) z = complex(0.0, std::sqrt(std::max(-lambda.real(), 0.0)));
    Hamiltonian h = Hamiltonian::diagonal_sl(prob.iv, prob.w,
                                             [p = prob.p](double t) { return 1.0 / p(t); });
    CertifiedValue q = weyl_coefficient(h, z, eps / std::abs(z));
    return {z * q.value, std::abs(z) * q.radius};
}

}  // namespace canweyl
