#pragma once

// Two-dimensional canonical-system Hamiltonians H on [a,b): positive
// semi-definite 2x2 matrix fields together with their primitive
// M(t) = int_a^t H(s) ds.  Four representations are supported:
//
//   * piecewise constant panels (exact primitive, exact transfer matrices),
//   * power primitives  m_i(t) = sum_k c_ik (t-a)^{rho_ik}  (exact primitive),
//   * diagonal fields built from Sturm-Liouville data w, 1/p,
//   * general callables (primitive by adaptive quadrature unless supplied).
//
// Structural transforms (rotation, -JHJ, reparameterization, splitting of
// leading indivisible intervals) preserve exact representations when they
// can.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "canweyl/core.hpp"
#include "canweyl/errors.hpp"
#include "canweyl/quadrature.hpp"
#include "canweyl/roots.hpp"

namespace canweyl {

struct Interval {
    double a = 0.0;
    double b = inf;
};

enum class PrimitiveSource { Exact, Quadrature };

/// Evaluator bundle for M(t); m_i(a) = 0, m1 and m2 non-decreasing.
struct Primitive {
    std::function<Mat2(double)> M;
    PrimitiveSource source = PrimitiveSource::Exact;
    double quad_rel_tol = 1e-10;

    Mat2 operator()(double t) const { return M(t); }
    double m1(double t) const { return M(t).m11; }
    double m2(double t) const { return M(t).m22; }
    double m3(double t) const { return M(t).m12; }
    double det(double t) const { return M(t).det(); }
    double trace(double t) const { return M(t).trace(); }
};

struct IndivisiblePrefix {
    enum class Kind { TypeZero, TypeHalfPi };
    Kind kind;
    double endpoint;  // right edge of the maximal prefix
    double weight;    // integral of the trace over the prefix
};

class Hamiltonian {
public:
    struct Panels {
        // panels [edges[i], edges[i+1]) carry values[i]; edges.back() may be +inf
        std::vector<double> edges;
        std::vector<Mat2> values;
        std::vector<Mat2> prefix;  // prefix[i] = M(edges[i])

        void rebuild_prefix() {
            prefix.assign(edges.size(), Mat2{});
            for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
                const double len = edges[i + 1] - edges[i];
                prefix[i + 1] = std::isfinite(len)
                                    ? prefix[i] + len * values[i]
                                    : Mat2{inf, inf, inf, inf};
            }
        }
        Mat2 value_at(double t) const {
            auto it = std::upper_bound(edges.begin(), edges.end(), t);
            std::size_t i = (it == edges.begin()) ? 0 : (it - edges.begin() - 1);
            if (i >= values.size()) i = values.size() - 1;
            return values[i];
        }
        Mat2 primitive_at(double t) const {
            auto it = std::upper_bound(edges.begin(), edges.end(), t);
            std::size_t i = (it == edges.begin()) ? 0 : (it - edges.begin() - 1);
            if (i >= values.size()) i = values.size() - 1;
            return prefix[i] + (t - edges[i]) * values[i];
        }
    };

    struct PowerTerm {
        double coef;
        double expo;  // > 0
    };
    struct Powers {
        double origin;  // expansion point (= left endpoint)
        std::vector<PowerTerm> m1, m2, m3;

        static double eval_terms(const std::vector<PowerTerm>& ts, double u) {
            double s = 0.0;
            for (const auto& p : ts) s += p.coef * std::pow(u, p.expo);
            return s;
        }
        static double eval_deriv(const std::vector<PowerTerm>& ts, double u) {
            double s = 0.0;
            for (const auto& p : ts) s += p.coef * p.expo * std::pow(u, p.expo - 1.0);
            return s;
        }
        Mat2 primitive_at(double t) const {
            const double u = t - origin;
            if (u <= 0.0) return Mat2{};
            const double a1 = eval_terms(m1, u), a2 = eval_terms(m2, u), a3 = eval_terms(m3, u);
            return {a1, a3, a3, a2};
        }
        Mat2 value_at(double t) const {
            const double u = t - origin;
            const double h1 = eval_deriv(m1, u), h2 = eval_deriv(m2, u), h3 = eval_deriv(m3, u);
            return {h1, h3, h3, h2};
        }
    };

    using KnotsFn = std::function<std::vector<double>(double, double)>;

    struct Parts {
        Interval iv;
        std::function<Mat2(double)> eval;
        std::function<Mat2(double)> prim;  // null => quadrature-backed
        PrimitiveSource prim_source = PrimitiveSource::Exact;
        KnotsFn knots;                     // interior discontinuities in (t1,t2)
        bool constant_between_knots = false;
        bool knots_accumulate_left = false;
        bool limit_point = true;
        double quad_rel_tol = 1e-10;
        std::variant<std::monostate, Panels, Powers> exact;
        bool skip_psd_probe = false;
    };

    Hamiltonian() = default;
    explicit Hamiltonian(Parts parts) : impl_(std::make_shared<const Parts>(finish(std::move(parts)))) {}

    // ---- factories -------------------------------------------------------

    static Hamiltonian piecewise_constant(double a, std::vector<double> cuts,
                                          std::vector<Mat2> values, double b = inf) {
        if (values.size() != cuts.size() + 1)
            throw DomainError("piecewise_constant: need one more value than cuts");
        Panels p;
        p.edges.push_back(a);
        for (double c : cuts) {
            if (c <= p.edges.back() || c >= b)
                throw DomainError("piecewise_constant: cuts must increase inside (a,b)");
            p.edges.push_back(c);
        }
        p.edges.push_back(b);
        p.values = std::move(values);
        p.rebuild_prefix();

        Parts parts;
        parts.iv = {a, b};
        const auto sp = std::make_shared<Panels>(p);
        parts.eval = [sp](double t) { return sp->value_at(t); };
        parts.prim = [sp](double t) { return sp->primitive_at(t); };
        parts.knots = [sp](double t1, double t2) {
            std::vector<double> ks;
            for (std::size_t i = 1; i + 1 < sp->edges.size(); ++i)
                if (sp->edges[i] > t1 && sp->edges[i] < t2) ks.push_back(sp->edges[i]);
            return ks;
        };
        parts.constant_between_knots = true;
        parts.exact = *sp;
        double tr_tail = parts.eval(std::isfinite(b) ? 0.5 * (p.edges[p.edges.size() - 2] + b)
                                                     : p.edges[p.edges.size() - 2] + 1.0)
                             .trace();
        parts.limit_point = !std::isfinite(b) ? tr_tail > 0.0 : false;
        return Hamiltonian(std::move(parts));
    }

    static Hamiltonian constant(const Mat2& h, double a = 0.0, double b = inf) {
        return piecewise_constant(a, {}, {h}, b);
    }

    static Hamiltonian power_primitive(double a, std::vector<PowerTerm> m1,
                                       std::vector<PowerTerm> m2,
                                       std::vector<PowerTerm> m3, double b = inf) {
        for (const auto* lst : {&m1, &m2, &m3})
            for (const auto& t : *lst)
                if (!(t.expo > 0.0))
                    throw DomainError("power_primitive: exponents must be positive");
        Powers pw{a, std::move(m1), std::move(m2), std::move(m3)};
        Parts parts;
        parts.iv = {a, b};
        const auto sp = std::make_shared<Powers>(pw);
        parts.eval = [sp](double t) { return sp->value_at(t); };
        parts.prim = [sp](double t) { return sp->primitive_at(t); };
        parts.exact = *sp;
        parts.limit_point = !std::isfinite(b);
        return Hamiltonian(std::move(parts));
    }

    static Hamiltonian callable(Interval iv, std::function<double(double)> h1,
                                std::function<double(double)> h2,
                                std::function<double(double)> h3,
                                std::function<Mat2(double)> exact_primitive = nullptr,
                                KnotsFn knots = nullptr) {
        Parts parts;
        parts.iv = iv;
        parts.eval = [h1, h2, h3](double t) {
            const double a = h1(t), b = h2(t), c = h3(t);
            return Mat2{a, c, c, b};
        };
        if (exact_primitive) {
            parts.prim = std::move(exact_primitive);
        } else {
            parts.prim_source = PrimitiveSource::Quadrature;
        }
        parts.knots = std::move(knots);
        parts.limit_point = !std::isfinite(iv.b);
        return Hamiltonian(std::move(parts));
    }

    /// H = diag(w, 1/p) for a Sturm-Liouville pair (no potential).
    static Hamiltonian diagonal_sl(Interval iv, std::function<double(double)> w,
                                   std::function<double(double)> pinv) {
        return callable(iv, std::move(w), std::move(pinv), [](double) { return 0.0; });
    }

    // ---- accessors -------------------------------------------------------

    const Interval& interval() const { return impl_->iv; }
    double left() const { return impl_->iv.a; }
    double right() const { return impl_->iv.b; }
    bool limit_point() const { return impl_->limit_point; }
    bool constant_between_knots() const { return impl_->constant_between_knots; }
    bool knots_accumulate_left() const { return impl_->knots_accumulate_left; }

    const Panels* panels() const { return std::get_if<Panels>(&impl_->exact); }
    const Powers* powers() const { return std::get_if<Powers>(&impl_->exact); }

    /// H(t); DomainError outside [a,b).
    Mat2 value(double t) const {
        if (!(t >= impl_->iv.a) || !(t < impl_->iv.b))
            throw DomainError("eval: t outside [a,b)");
        return impl_->eval(t);
    }
    Mat2 operator()(double t) const { return value(t); }

    Primitive primitive() const {
        Primitive p;
        p.source = impl_->prim_source;
        p.quad_rel_tol = impl_->quad_rel_tol;
        if (impl_->prim) {
            p.M = impl_->prim;
        } else {
            auto self = impl_;
            p.M = [self](double t) { return quad_primitive(*self, t); };
        }
        return p;
    }

    std::vector<double> knots_in(double t1, double t2) const {
        if (!impl_->knots) return {};
        return impl_->knots(t1, t2);
    }

    const std::shared_ptr<const Parts>& parts() const { return impl_; }

private:
    static Mat2 quad_primitive(const Parts& p, double t) {
        if (t <= p.iv.a) return Mat2{};
        const double rel = p.quad_rel_tol;
        auto comp = [&](auto pick) {
            return integrate([&](double s) { return pick(p.eval(s)); }, p.iv.a, t, rel).value;
        };
        const double a1 = comp([](const Mat2& m) { return m.m11; });
        const double a2 = comp([](const Mat2& m) { return m.m22; });
        const double a3 = comp([](const Mat2& m) { return m.m12; });
        return {a1, a3, a3, a2};
    }

    static Parts finish(Parts parts) {
        if (!(parts.iv.a < parts.iv.b)) throw DomainError("interval: need a < b");
        if (!parts.skip_psd_probe) psd_probe(parts);
        return parts;
    }

    static void psd_probe(const Parts& p) {
        const double a = p.iv.a;
        const double span = std::isfinite(p.iv.b) ? (p.iv.b - a) : 1.0;
        for (int k = 1; k <= 40; ++k) {
            const double u = span * std::pow(0.75, k);
            const Mat2 h = p.eval(a + u);
            const double d = h.m11 * h.m22 - h.m12 * h.m12;
            if (h.m11 < -1e-10 * (1.0 + std::abs(h.m11)) ||
                h.m22 < -1e-10 * (1.0 + std::abs(h.m22)) ||
                d < -1e-10 * (1.0 + h.m11 * h.m22))
                throw DomainError("hamiltonian: sampled H(t) not positive semi-definite");
        }
    }

    std::shared_ptr<const Parts> impl_;
};

// ---- structural transforms ----------------------------------------------

namespace detail {

inline Mat2 rotate_mat(const Mat2& m, double s, double c) {
    const Mat2 q{s, -c, c, s};
    return q * m * q.transpose();
}

inline Mat2 flip_mat(const Mat2& m) {  // -J m J
    return {m.m22, -m.m12, -m.m21, m.m11};
}

template <class MapFn>
Hamiltonian map_entries(const Hamiltonian& h, MapFn f) {
    Hamiltonian::Parts parts;
    const auto& src = *h.parts();
    parts.iv = src.iv;
    parts.limit_point = src.limit_point;
    parts.constant_between_knots = src.constant_between_knots;
    parts.knots_accumulate_left = src.knots_accumulate_left;
    parts.knots = src.knots;
    parts.quad_rel_tol = src.quad_rel_tol;
    parts.prim_source = src.prim_source;
    auto ev = src.eval;
    parts.eval = [ev, f](double t) { return f(ev(t)); };
    if (src.prim) {
        auto pr = src.prim;
        parts.prim = [pr, f](double t) { return f(pr(t)); };
    }
    return Hamiltonian(std::move(parts));
}

}  // namespace detail

/// Rotated Hamiltonian Q H Q^T with Q = [[sin phi, -cos phi],[cos phi, sin phi]].
/// det M and tr M are preserved pointwise.
inline Hamiltonian rotate(const Hamiltonian& h, double phi) {
    const double s = std::sin(phi), c = std::cos(phi);
    if (const auto* pn = h.panels()) {
        Hamiltonian::Panels out = *pn;
        for (auto& v : out.values) v = detail::rotate_mat(v, s, c);
        out.rebuild_prefix();
        std::vector<double> cuts(out.edges.begin() + 1, out.edges.end() - 1);
        return Hamiltonian::piecewise_constant(out.edges.front(), cuts, out.values,
                                               out.edges.back());
    }
    if (const auto* pw = h.powers()) {
        auto scaled = [](const std::vector<Hamiltonian::PowerTerm>& ts, double f) {
            std::vector<Hamiltonian::PowerTerm> r;
            for (auto t : ts)
                if (f != 0.0) r.push_back({t.coef * f, t.expo});
            return r;
        };
        auto merge = [](std::vector<Hamiltonian::PowerTerm> a,
                        const std::vector<Hamiltonian::PowerTerm>& b,
                        const std::vector<Hamiltonian::PowerTerm>& c) {
            a.insert(a.end(), b.begin(), b.end());
            a.insert(a.end(), c.begin(), c.end());
            std::sort(a.begin(), a.end(),
                      [](auto& x, auto& y) { return x.expo < y.expo; });
            std::vector<Hamiltonian::PowerTerm> out;
            for (auto t : a) {
                if (!out.empty() && std::abs(out.back().expo - t.expo) < 1e-12)
                    out.back().coef += t.coef;
                else
                    out.push_back(t);
            }
            std::erase_if(out, [](auto& t) { return t.coef == 0.0; });
            return out;
        };
        // QMQ^T:  m1' = s^2 m1 - 2sc m3 + c^2 m2
        //         m3' = sc m1 + (s^2-c^2) m3 - sc m2
        //         m2' = c^2 m1 + 2sc m3 + s^2 m2
        auto n1 = merge(scaled(pw->m1, s * s), scaled(pw->m3, -2 * s * c), scaled(pw->m2, c * c));
        auto n3 = merge(scaled(pw->m1, s * c), scaled(pw->m3, s * s - c * c), scaled(pw->m2, -s * c));
        auto n2 = merge(scaled(pw->m1, c * c), scaled(pw->m3, 2 * s * c), scaled(pw->m2, s * s));
        return Hamiltonian::power_primitive(pw->origin, n1, n2, n3, h.right());
    }
    return detail::map_entries(h, [s, c](const Mat2& m) { return detail::rotate_mat(m, s, c); });
}

/// -J H J = [[h2, -h3],[-h3, h1]]; the Weyl coefficient becomes -1/q_H.
inline Hamiltonian invert_JHJ(const Hamiltonian& h) {
    if (const auto* pn = h.panels()) {
        std::vector<Mat2> vals;
        for (const auto& v : pn->values) vals.push_back(detail::flip_mat(v));
        std::vector<double> cuts(pn->edges.begin() + 1, pn->edges.end() - 1);
        return Hamiltonian::piecewise_constant(pn->edges.front(), cuts, vals, pn->edges.back());
    }
    if (const auto* pw = h.powers()) {
        auto neg = pw->m3;
        for (auto& t : neg) t.coef = -t.coef;
        return Hamiltonian::power_primitive(pw->origin, pw->m2, pw->m1, neg, h.right());
    }
    return detail::map_entries(h, [](const Mat2& m) { return detail::flip_mat(m); });
}

/// H restricted to [new_a, b); the primitive restarts at zero.
inline Hamiltonian restrict_left(const Hamiltonian& h, double new_a) {
    if (!(new_a >= h.left() && new_a < h.right()))
        throw DomainError("restrict_left: new endpoint outside [a,b)");
    if (new_a == h.left()) return h;
    if (const auto* pn = h.panels()) {
        std::vector<double> cuts;
        std::vector<Mat2> vals;
        for (std::size_t i = 0; i + 1 < pn->edges.size(); ++i) {
            if (pn->edges[i + 1] <= new_a) continue;
            if (!vals.empty()) cuts.push_back(pn->edges[i]);
            vals.push_back(pn->values[i]);
        }
        return Hamiltonian::piecewise_constant(new_a, cuts, vals, pn->edges.back());
    }
    const auto& src = *h.parts();
    Hamiltonian::Parts parts;
    parts.iv = {new_a, src.iv.b};
    parts.limit_point = src.limit_point;
    parts.constant_between_knots = src.constant_between_knots;
    parts.knots = src.knots;
    parts.quad_rel_tol = src.quad_rel_tol;
    parts.prim_source = src.prim_source;
    parts.eval = src.eval;
    if (src.prim) {
        auto pr = src.prim;
        const Mat2 off = pr(new_a);
        parts.prim = [pr, off](double t) { return pr(t) - off; };
    }
    return Hamiltonian(std::move(parts));
}

struct Reparameterization {
    Interval domain;                           // [a~, b~)
    std::function<double(double)> map;         // onto [a,b)
    std::function<double(double)> derivative;  // map' > 0 a.e.
    std::function<double(double)> inverse;     // optional
};

/// H~(u) = H(phi(u)) phi'(u); the primitive composes, m~_j = m_j o phi,
/// and the Weyl coefficient is unchanged.
inline Hamiltonian reparameterize(const Hamiltonian& h, const Reparameterization& r) {
    // monotonicity probe
    const double ra = r.domain.a;
    const double span = std::isfinite(r.domain.b) ? r.domain.b - ra : 1.0;
    double prev = r.map(ra);
    for (int k = 1; k <= 24; ++k) {
        const double u = ra + span * k / 24.5;
        const double v = r.map(u);
        if (v < prev) throw NotMonotone("reparameterize: sampled map decreases");
        prev = v;
    }
    const auto& src = *h.parts();
    Hamiltonian::Parts parts;
    parts.iv = r.domain;
    parts.limit_point = src.limit_point;
    parts.quad_rel_tol = src.quad_rel_tol;
    parts.prim_source = src.prim_source;
    auto ev = src.eval;
    auto phi = r.map;
    auto dphi = r.derivative;
    parts.eval = [ev, phi, dphi](double u) { return dphi(u) * ev(phi(u)); };
    if (src.prim) {
        auto pr = src.prim;
        parts.prim = [pr, phi](double u) { return pr(phi(u)); };
    }
    if (src.knots && r.inverse) {
        auto kn = src.knots;
        auto inv = r.inverse;
        parts.knots = [kn, phi, inv](double u1, double u2) {
            std::vector<double> out;
            for (double t : kn(phi(u1), phi(u2))) out.push_back(inv(t));
            return out;
        };
        parts.constant_between_knots = false;  // phi' varies inside panels in general
        parts.knots_accumulate_left = src.knots_accumulate_left;
    }
    return Hamiltonian(std::move(parts));
}

/// Reparameterize so that tr H~ == 1 a.e. (time = accumulated trace).
inline Hamiltonian trace_normalize(const Hamiltonian& h) {
    auto prim = h.primitive();
    auto ev = h.parts()->eval;
    const double a = h.left(), b = h.right();
    auto trM = [prim](double t) { return prim.trace(t); };
    const double total = std::isfinite(b) ? trM(b - 1e-12 * (b - a)) : inf;
    auto phi = [trM, a, b](double u) {
        // generalized inverse of t -> tr M(t)
        double hi = std::isfinite(b) ? b : std::max(1.0, 2.0 * (a + 1.0) - a);
        if (!std::isfinite(b)) {
            double probe = std::max(1.0, std::abs(a) + 1.0);
            while (trM(a + probe) < u) probe *= 2.0;
            hi = a + probe;
        }
        return bisect_nondecreasing(trM, a, hi, u, 1e-14);
    };
    Reparameterization r;
    r.domain = {0.0, total};
    r.map = phi;
    r.derivative = [ev, phi](double u) {
        const double tr = ev(phi(u)).trace();
        return tr > 0.0 ? 1.0 / tr : 0.0;
    };
    r.inverse = trM;
    return reparameterize(h, r);
}

// ---- leading indivisible intervals ---------------------------------------

struct SplitResult {
    std::optional<IndivisiblePrefix> prefix;
    Hamiltonian tail;
};

namespace detail {

// vanishing test per the detection threshold: integral of the entry over the
// prefix at most 1e-12 of the accumulated trace
inline bool entry_vanishes(double entry_integral, double trace_integral) {
    return std::abs(entry_integral) <= 1e-12 * trace_integral;
}

}  // namespace detail

/// Detect a maximal leading interval where h2 (type 0) or h1 (type pi/2)
/// vanishes.  The composition rules are
///   type 0:     q_H(z) = weight*z + q_tail(z)
///   type pi/2:  q_H(z) = -1 / (weight*z - 1/q_tail(z)).
inline SplitResult detect_and_split_indivisible(const Hamiltonian& h) {
    auto prim = h.primitive();
    const double a = h.left(), b = h.right();

    auto classify = [&](double t) -> int {
        const Mat2 m = prim(t);
        const double tr = m.trace();
        if (tr <= 0.0) return 0;  // nothing accumulated yet
        if (detail::entry_vanishes(m.m22, tr)) return 1;   // h2 == 0 so far
        if (detail::entry_vanishes(m.m11, tr)) return 2;   // h1 == 0 so far
        return 0;
    };

    const double span = std::isfinite(b) ? (b - a) : 1.0;
    const double probe = a + span * 1e-9;
    const int kind = classify(probe);
    if (kind == 0) return {std::nullopt, h};

    // grow a bracket [lo,hi] with classify(lo)==kind, classify(hi)!=kind
    double lo = probe, hi = probe;
    for (int k = 0; k < 2048; ++k) {
        double next = a + (hi - a) * 2.0;
        if (std::isfinite(b) && next >= b) next = b - (b - hi) * 0.5;
        if (classify(next) == kind) {
            lo = hi = next;
            if (std::isfinite(b) && b - next <= 1e-14 * span)
                throw NotSupported("indivisible interval covers the whole domain");
            if (!std::isfinite(b) && prim.trace(next) > 1e12)
                throw NotSupported("indivisible interval covers the whole domain");
        } else {
            hi = next;
            break;
        }
    }
    const double endpoint = bisect_nondecreasing(
        [&](double t) { return classify(t) == kind ? 0.0 : 1.0; }, lo, hi, 0.5, 1e-13);

    IndivisiblePrefix pre;
    pre.kind = (kind == 1) ? IndivisiblePrefix::Kind::TypeZero
                           : IndivisiblePrefix::Kind::TypeHalfPi;
    pre.endpoint = endpoint;
    pre.weight = prim.trace(endpoint);
    return {pre, restrict_left(h, endpoint)};
}

/// Split alternating leading indivisible prefixes; at most `cap` rounds.
inline std::pair<std::vector<IndivisiblePrefix>, Hamiltonian>
split_all_indivisible(const Hamiltonian& h, int cap = 16) {
    std::vector<IndivisiblePrefix> prefixes;
    Hamiltonian cur = h;
    for (int i = 0; i <= cap; ++i) {
        SplitResult s = detect_and_split_indivisible(cur);
        if (!s.prefix) return {prefixes, cur};
        if (i == cap)
            throw NotSupported("split cap exceeded: leading indivisible intervals keep alternating");
        prefixes.push_back(*s.prefix);
        cur = s.tail;
    }
    return {prefixes, cur};
}

// ---- rank-one limit at the left endpoint ----------------------------------

struct RotationLimit {
    double c1, c2, c3;
    double phi;  // sin(phi) = sqrt(c2), cot(phi) = c3/c2
};

/// Limit of M(t)/(m1+m2)(t) as t -> a, which must be a rank-one matrix with
/// positive diagonal.  NoRankOneLimit otherwise.
inline RotationLimit derive_rotation(const Hamiltonian& h) {
    auto prim = h.primitive();
    const double a = h.left();
    const double span = std::isfinite(h.right()) ? (h.right() - a) : 1.0;

    Mat2 limit{};
    bool found = false;
    Mat2 prev{};
    bool have_prev = false;
    for (int k = 6; k <= 46; ++k) {
        const double u = span * std::pow(0.5, k);
        const Mat2 m = prim(a + u);
        const double tr = m.trace();
        if (tr <= 0.0) break;
        const Mat2 n = (1.0 / tr) * m;
        if (have_prev && max_abs(n - prev) <= 1e-7) {
            limit = n;
            found = true;
        }
        prev = n;
        have_prev = true;
    }
    if (!found) throw NoRankOneLimit("derive_rotation: M/tr M does not stabilise near a");
    const double c1 = limit.m11, c2 = limit.m22, c3 = limit.m12;
    if (!(c1 > 0.0 && c2 > 0.0) || std::abs(c1 * c2 - c3 * c3) > 1e-5 * std::max(c1 * c2, 1e-30))
        throw NoRankOneLimit("derive_rotation: limit matrix is not rank one with positive diagonal");
    const double s = std::sqrt(c2);
    const double c = c3 / s;
    return {c1, c2, c3, std::atan2(s, c)};
}

}  // namespace canweyl
