#pragma once

// Named model Hamiltonians.  These cover the qualitatively different regimes
// the envelope machinery has to handle: constant fields, rank-one fields
// alternating between two directions (on a finite interval pattern and on a
// dyadic pattern accumulating at the left endpoint), a power perturbation of
// a rank-one primitive, oscillating off-diagonal entries, pure-power
// primitives, and fields starting with an indivisible interval.

#include <cmath>
#include <string>
#include <vector>

#include "canweyl/hamiltonian.hpp"

namespace canweyl::corpus {

inline Hamiltonian identity() { return Hamiltonian::constant(mat2_identity); }

inline Hamiltonian diag_const(double d1, double d2) {
    return Hamiltonian::constant(Mat2{d1, 0.0, 0.0, d2});
}

namespace detail {

inline Mat2 dyad(double phi) {  // xi_phi xi_phi^T
    const double c = std::cos(phi), s = std::sin(phi);
    return {c * c, c * s, c * s, s * s};
}

// Dyadic two-set pattern: with intervals I_k = (2^k, 2^{k+1}], the "minus"
// set collects odd k and the "plus" set even k.
inline int dyadic_level(double t) {
    int e = std::ilogb(t);
    if (std::ldexp(1.0, e) == t) --e;  // t = 2^e sits in I_{e-1}
    return e;
}

inline bool dyadic_in_minus(double t) { return ((dyadic_level(t) % 2) + 2) % 2 == 1; }

/// Lebesgue measure of the odd-level set intersected with (0,t).
inline double dyadic_minus_measure(double t) {
    if (t <= 0.0) return 0.0;
    const int k = dyadic_level(t);
    const double blk = std::ldexp(1.0, k);
    if (((k % 2) + 2) % 2 == 1) return t - (2.0 / 3.0) * blk;
    return (2.0 / 3.0) * blk;
}

}  // namespace detail

struct AlternatingPattern {
    std::function<bool(double)> in_minus;
    std::function<double(double)> minus_measure;  // t -> |I_minus ∩ (0,t)|
    Hamiltonian::KnotsFn knots;
    bool accumulate_left = false;
};

/// Rank-one field xi_{+phi} xi^T on the plus set and xi_{-phi} xi^T on the
/// minus set.  m1 = t cos^2 phi, m2 = t sin^2 phi regardless of the pattern.
inline Hamiltonian rank_one_alternating(double phi, AlternatingPattern pat) {
    const double c = std::cos(phi), s = std::sin(phi);
    const Mat2 plus = detail::dyad(phi), minus = detail::dyad(-phi);
    auto lm = pat.minus_measure;
    Hamiltonian::Parts parts;
    parts.iv = {0.0, inf};
    parts.eval = [pat, plus, minus](double t) { return pat.in_minus(t) ? minus : plus; };
    parts.prim = [c, s, lm](double t) {
        const double m1 = t * c * c, m2 = t * s * s;
        const double m3 = (t - 2.0 * lm(t)) * c * s;
        return Mat2{m1, m3, m3, m2};
    };
    parts.knots = pat.knots;
    parts.constant_between_knots = true;
    parts.knots_accumulate_left = pat.accumulate_left;
    parts.limit_point = true;
    return Hamiltonian(std::move(parts));
}

/// Dyadic alternating pattern; the pattern repeats under t -> 4t, so the
/// Weyl coefficient satisfies q(2z) = -q(-z) and |q(2ir)| = |q(ir)|.
inline Hamiltonian alternating_dyadic(double phi = M_PI / 4) {
    AlternatingPattern pat;
    pat.in_minus = detail::dyadic_in_minus;
    pat.minus_measure = detail::dyadic_minus_measure;
    pat.knots = [](double t1, double t2) {
        std::vector<double> ks;
        if (t2 <= 0.0) return ks;
        int e = std::ilogb(std::max(t1, 1e-300));
        for (double k = std::ldexp(1.0, e); k < t2; k *= 2.0)
            if (k > t1) ks.push_back(k);
        return ks;
    };
    pat.accumulate_left = true;
    return rank_one_alternating(phi, pat);
}

/// One flipped interval (1/4, 1/2]; plus-direction everywhere else.
inline Hamiltonian alternating_interval(double phi = M_PI / 4) {
    AlternatingPattern pat;
    pat.in_minus = [](double t) { return t > 0.25 && t <= 0.5; };
    pat.minus_measure = [](double t) { return std::min(std::max(t - 0.25, 0.0), 0.25); };
    pat.knots = [](double t1, double t2) {
        std::vector<double> ks;
        for (double k : {0.25, 0.5})
            if (k > t1 && k < t2) ks.push_back(k);
        return ks;
    };
    return rank_one_alternating(phi, pat);
}

/// Primitive M(t) = [[4t + t^alpha, 2t + t^alpha], [2t + t^alpha, t + t^alpha]]:
/// a rank-one linear part tilted by a power perturbation.  det M = t^{alpha+1}.
inline Hamiltonian tilted_power(double alpha = 2.0) {
    using PT = Hamiltonian::PowerTerm;
    return Hamiltonian::power_primitive(
        0.0, {PT{4.0, 1.0}, PT{1.0, alpha}}, {PT{1.0, 1.0}, PT{1.0, alpha}},
        {PT{2.0, 1.0}, PT{1.0, alpha}});
}

/// tilted_power after the rank-one rotation derived from its M/tr M limit.
inline Hamiltonian tilted_power_rotated(double alpha = 2.0) {
    Hamiltonian h = tilted_power(alpha);
    return rotate(h, derive_rotation(h).phi);
}

/// Pure power primitive m1 = t^rho1, m2 = t^rho2, m3 = c3 t^{(rho1+rho2)/2}.
inline Hamiltonian pure_power(double rho1, double rho2, double c3 = 0.0) {
    using PT = Hamiltonian::PowerTerm;
    std::vector<PT> m3;
    if (c3 != 0.0) m3.push_back(PT{c3, 0.5 * (rho1 + rho2)});
    return Hamiltonian::power_primitive(0.0, {PT{1.0, rho1}}, {PT{1.0, rho2}}, m3);
}

/// diag(0,1) on (0,1), identity after: starts with a type-pi/2 indivisible
/// interval of weight 1.
inline Hamiltonian with_half_pi_prefix() {
    return Hamiltonian::piecewise_constant(
        0.0, {1.0}, {Mat2{0.0, 0.0, 0.0, 1.0}, mat2_identity});
}

/// diag(1,0) on (0,1), identity after: starts with a type-0 indivisible
/// interval of weight 1.
inline Hamiltonian with_zero_prefix() {
    return Hamiltonian::piecewise_constant(
        0.0, {1.0}, {Mat2{1.0, 0.0, 0.0, 0.0}, mat2_identity});
}

/// h1 = 2t, h2 = 1, h3 = 0: a smooth callable with quadrature primitive.
inline Hamiltonian callable_linear() {
    return Hamiltonian::callable(
        {0.0, inf}, [](double t) { return 2.0 * t; }, [](double) { return 1.0; },
        [](double) { return 0.0; });
}

// ---- oscillating off-diagonal fixture -------------------------------------

/// Angle sequence sweeping [-1,1] back and forth with shrinking step 1/d:
/// 1, 1/2, 0, -1/2, -1, -2/3, -1/3, 0, 1/3, 2/3, 1, 3/4, ...
inline std::vector<double> sweep_sequence(int count) {
    std::vector<double> out;
    out.reserve(count);
    int num = 1, den = 1, dir = -1;
    out.push_back(1.0);
    int d = 2;
    num = d;
    den = d;
    while ((int)out.size() < count) {
        num += dir;
        out.push_back((double)num / den);
        if (std::abs(num) == den) {
            dir = -dir;
            ++d;
            num = (num > 0 ? 1 : -1) * d;
            den = d;
        }
    }
    out.resize(count);
    return out;
}

/// Panels (t_{n+1}, t_n], t_n = 2^{1-n^2}, carrying (1/2)[[1,s_n],[s_n,1]]
/// with s_n = sin(pi phi_n / 2); diag(0,1) beyond t = 1.  m1 = m2 = t/2 on
/// (0,1] while m3 oscillates, so the envelope lower bound L oscillates
/// between 0 and A.
class OscillatingOffdiag {
public:
    explicit OscillatingOffdiag(int levels = 40) : phis_(sweep_sequence(levels)) {}

    static double t_level(int n) { return std::ldexp(1.0, 1 - n * n); }

    double s_of_level(int n) const {
        if (n < 1) return 0.0;
        if (n > (int)phis_.size()) return 0.0;
        return std::sin(M_PI * 0.5 * phis_[n - 1]);
    }

    int level_of(double t) const {  // n with t in (t_{n+1}, t_n]
        int n = 1;
        while (t <= t_level(n + 1) && n < 1000) ++n;
        return n;
    }

    double m3(double t) const {
        if (t > 1.0) t = 1.0;
        const int n = level_of(t);
        double acc = (t - t_level(n + 1)) * s_of_level(n);
        for (int k = n + 1; k < n + 64; ++k) {
            const double tk = t_level(k), tk1 = t_level(k + 1);
            if (tk <= 0.0) break;
            acc += (tk - tk1) * s_of_level(k);
        }
        return 0.5 * acc;
    }

    Hamiltonian hamiltonian() const {
        auto self = *this;
        Hamiltonian::Parts parts;
        parts.iv = {0.0, inf};
        parts.eval = [self](double t) {
            if (t > 1.0) return Mat2{0.0, 0.0, 0.0, 1.0};
            const double s = self.s_of_level(self.level_of(t));
            return Mat2{0.5, 0.5 * s, 0.5 * s, 0.5};
        };
        parts.prim = [self](double t) {
            const double m1 = 0.5 * std::min(t, 1.0);
            const double m2 = t <= 1.0 ? 0.5 * t : 0.5 + (t - 1.0);
            const double m3 = self.m3(t);
            return Mat2{m1, m3, m3, m2};
        };
        parts.knots = [](double t1, double t2) {
            std::vector<double> ks;
            if (1.0 > t1 && 1.0 < t2) ks.push_back(1.0);
            for (int n = 1; n < 1000; ++n) {
                const double tn = t_level(n);
                if (tn <= 0.0 || tn <= t1) break;
                if (tn > t1 && tn < t2 && tn != 1.0) ks.push_back(tn);
            }
            std::sort(ks.begin(), ks.end());
            return ks;
        };
        parts.constant_between_knots = true;
        parts.knots_accumulate_left = true;
        parts.limit_point = true;
        return Hamiltonian(std::move(parts));
    }

    const std::vector<double>& angles() const { return phis_; }

private:
    std::vector<double> phis_;
};

inline Hamiltonian oscillating_offdiag() { return OscillatingOffdiag().hamiltonian(); }

// ---- registry --------------------------------------------------------------

inline std::vector<std::string> names() {
    return {"identity",        "diag-4-1",       "alternating-interval",
            "alternating-dyadic", "tilted-power", "tilted-power-rotated",
            "half-pi-prefix",  "zero-prefix",    "oscillating-offdiag",
            "callable-linear"};
}

inline Hamiltonian by_name(const std::string& name, double phi = M_PI / 4,
                           double alpha = 2.0) {
    if (name == "identity") return identity();
    if (name == "diag-4-1") return diag_const(4.0, 1.0);
    if (name == "alternating-interval") return alternating_interval(phi);
    if (name == "alternating-dyadic") return alternating_dyadic(phi);
    if (name == "tilted-power") return tilted_power(alpha);
    if (name == "tilted-power-rotated") return tilted_power_rotated(alpha);
    if (name == "half-pi-prefix") return with_half_pi_prefix();
    if (name == "zero-prefix") return with_zero_prefix();
    if (name == "oscillating-offdiag") return oscillating_offdiag();
    if (name == "callable-linear") return callable_linear();
    throw DomainError("unknown corpus name: " + name);
}

}  // namespace canweyl::corpus
