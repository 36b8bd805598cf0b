#pragma once

// Power series coefficients of the fundamental solution,
//   W_0 = I,  W_{n+1}(t) = int_a^t W_n H ds (-J),
// the bilinear tables alpha_{n,m} = int_a^t W_n H W_m^T and
// beta_{n,m} = W_n(t) J W_m(t)^T, and verification of the entrywise
// coefficient estimates against M+(t) and m+(t).
//
// For piecewise-constant fields everything is evaluated in exact panel
// arithmetic (matrix polynomials per panel); power primitives use matrix
// power sums.  Other fields are replaced by a midpoint piecewise-constant
// refinement until the coefficients stabilise.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "canweyl/core.hpp"
#include "canweyl/errors.hpp"
#include "canweyl/hamiltonian.hpp"

namespace canweyl {

struct SeriesCoefficients {
    double t;
    std::vector<Mat2> W;                      // W_0..W_N at t
    std::vector<std::vector<Mat2>> alpha;     // alpha[n][m] (real 2x2)
    std::vector<std::vector<Mat2>> beta;      // beta[n][m]
};

namespace detail_series {

// piecewise "polynomial" with real exponents per panel, in the local
// variable u = s - edge[k]
struct PPoly {
    std::shared_ptr<const std::vector<double>> edges;  // tau_0..tau_K, K panels
    std::vector<std::vector<std::pair<double, Mat2>>> terms;

    int panels() const { return (int)edges->size() - 1; }
};

inline PPoly make_zero(std::shared_ptr<const std::vector<double>> edges) {
    PPoly p;
    p.edges = std::move(edges);
    p.terms.resize(p.panels());
    return p;
}

inline PPoly make_const(std::shared_ptr<const std::vector<double>> edges, const Mat2& c) {
    PPoly p = make_zero(std::move(edges));
    for (auto& t : p.terms) t.push_back({0.0, c});
    return p;
}

inline void merge_terms(std::vector<std::pair<double, Mat2>>& ts) {
    std::sort(ts.begin(), ts.end(), [](auto& a, auto& b) { return a.first < b.first; });
    std::vector<std::pair<double, Mat2>> out;
    for (auto& t : ts) {
        if (!out.empty() && std::abs(out.back().first - t.first) <= 1e-12 * (1.0 + std::abs(t.first)))
            out.back().second = out.back().second + t.second;
        else
            out.push_back(t);
    }
    ts = std::move(out);
}

inline PPoly add(const PPoly& a, const PPoly& b) {
    PPoly out = a;
    for (int k = 0; k < a.panels(); ++k) {
        out.terms[k].insert(out.terms[k].end(), b.terms[k].begin(), b.terms[k].end());
        merge_terms(out.terms[k]);
    }
    return out;
}

inline PPoly sub(const PPoly& a, const PPoly& b) {
    PPoly out = a;
    for (int k = 0; k < a.panels(); ++k) {
        for (auto& t : b.terms[k]) out.terms[k].push_back({t.first, -t.second});
        merge_terms(out.terms[k]);
    }
    return out;
}

inline PPoly mul(const PPoly& a, const PPoly& b) {
    PPoly out = make_zero(a.edges);
    for (int k = 0; k < a.panels(); ++k) {
        auto& dst = out.terms[k];
        for (const auto& x : a.terms[k])
            for (const auto& y : b.terms[k])
                dst.push_back({x.first + y.first, x.second * y.second});
        merge_terms(dst);
    }
    return out;
}

inline PPoly lmul(const Mat2& c, const PPoly& a) {
    PPoly out = a;
    for (auto& panel : out.terms)
        for (auto& t : panel) t.second = c * t.second;
    return out;
}

inline PPoly rmul(const PPoly& a, const Mat2& c) {
    PPoly out = a;
    for (auto& panel : out.terms)
        for (auto& t : panel) t.second = t.second * c;
    return out;
}

inline PPoly transpose(const PPoly& a) {
    PPoly out = a;
    for (auto& panel : out.terms)
        for (auto& t : panel) t.second = t.second.transpose();
    return out;
}

inline Mat2 eval_panel(const std::vector<std::pair<double, Mat2>>& ts, double u) {
    Mat2 acc{};
    for (const auto& t : ts) {
        const double p = t.first == 0.0 ? 1.0 : std::pow(u, t.first);
        acc = acc + p * t.second;
    }
    return acc;
}

inline Mat2 eval(const PPoly& a, double s) {
    const auto& e = *a.edges;
    int k = (int)(std::upper_bound(e.begin(), e.end(), s) - e.begin()) - 1;
    if (k < 0) k = 0;
    if (k >= a.panels()) k = a.panels() - 1;
    return eval_panel(a.terms[k], s - e[k]);
}

/// int_{tau_0}^{s} a; requires all exponents > -1.
inline PPoly integrate(const PPoly& a) {
    PPoly out = make_zero(a.edges);
    const auto& e = *a.edges;
    Mat2 acc{};
    for (int k = 0; k < a.panels(); ++k) {
        auto& dst = out.terms[k];
        if (max_abs(acc) != 0.0) dst.push_back({0.0, acc});
        for (const auto& t : a.terms[k]) {
            if (!(t.first > -1.0)) throw QuadratureError("series: non-integrable exponent");
            dst.push_back({t.first + 1.0, (1.0 / (t.first + 1.0)) * t.second});
        }
        merge_terms(dst);
        acc = eval_panel(dst, e[k + 1] - e[k]);
    }
    return out;
}

struct Context {
    std::shared_ptr<const std::vector<double>> edges;
    PPoly H;     // the field as a panel function
    PPoly M;     // its primitive
    double t;    // right endpoint
};

inline Context context_from_panels(const std::vector<double>& cuts,
                                   const std::vector<Mat2>& values, double a, double t) {
    auto edges = std::make_shared<std::vector<double>>();
    edges->push_back(a);
    for (double c : cuts)
        if (c > a && c < t) edges->push_back(c);
    edges->push_back(t);
    Context cx;
    cx.edges = edges;
    cx.t = t;
    cx.H = make_zero(edges);
    std::size_t vi = 0;
    for (int k = 0; k < cx.H.panels(); ++k) {
        while (vi + 1 < values.size() && cuts.size() > vi && cuts[vi] <= (*edges)[k]) ++vi;
        cx.H.terms[k].push_back({0.0, values[vi]});
    }
    cx.M = integrate(cx.H);
    return cx;
}

inline Context context_for(const Hamiltonian& h, double t, int refine_hint) {
    const double a = h.left();
    if (const auto* pn = h.panels()) {
        std::vector<double> cuts(pn->edges.begin() + 1, pn->edges.end() - 1);
        return context_from_panels(cuts, pn->values, a, t);
    }
    if (const auto* pw = h.powers()) {
        auto edges = std::make_shared<std::vector<double>>(std::vector<double>{a, t});
        Context cx;
        cx.edges = edges;
        cx.t = t;
        cx.H = make_zero(edges);
        cx.M = make_zero(edges);
        auto put = [&](const std::vector<Hamiltonian::PowerTerm>& ts, const Mat2& unit) {
            for (const auto& term : ts) {
                cx.M.terms[0].push_back({term.expo, term.coef * unit});
                cx.H.terms[0].push_back({term.expo - 1.0, term.coef * term.expo * unit});
            }
        };
        put(pw->m1, Mat2{1, 0, 0, 0});
        put(pw->m2, Mat2{0, 0, 0, 1});
        put(pw->m3, Mat2{0, 1, 1, 0});
        merge_terms(cx.H.terms[0]);
        merge_terms(cx.M.terms[0]);
        return cx;
    }
    if (h.constant_between_knots() && !h.knots_accumulate_left()) {
        std::vector<double> cuts = h.knots_in(a, t);
        std::vector<double> edges{a};
        edges.insert(edges.end(), cuts.begin(), cuts.end());
        edges.push_back(t);
        std::vector<Mat2> values;
        for (std::size_t i = 0; i + 1 < edges.size(); ++i)
            values.push_back(h.value(0.5 * (edges[i] + edges[i + 1])));
        return context_from_panels(cuts, values, a, t);
    }
    // midpoint piecewise-constant surrogate
    std::vector<double> cuts;
    std::vector<Mat2> values;
    const int n = refine_hint;
    for (int i = 0; i < n; ++i) {
        const double lo = a + (t - a) * i / n;
        const double hi = a + (t - a) * (i + 1) / n;
        if (i > 0) cuts.push_back(lo);
        values.push_back(h.value(0.5 * (lo + hi)));
    }
    return context_from_panels(cuts, values, a, t);
}

inline std::vector<PPoly> coefficient_polys(const Context& cx, int N) {
    std::vector<PPoly> W;
    W.push_back(make_const(cx.edges, mat2_identity));
    for (int n = 0; n < N; ++n)
        W.push_back(rmul(integrate(mul(W.back(), cx.H)), -mat2_J));
    return W;
}

inline PPoly det_poly(const Context& cx) {
    auto comp = [&](auto pick) {
        PPoly p = make_zero(cx.edges);
        for (int k = 0; k < p.panels(); ++k) {
            for (const auto& t : cx.M.terms[k]) {
                const double v = pick(t.second);
                if (v != 0.0) p.terms[k].push_back({t.first, v * mat2_identity});
            }
        }
        return p;
    };
    PPoly m1 = comp([](const Mat2& m) { return m.m11; });
    PPoly m2 = comp([](const Mat2& m) { return m.m22; });
    PPoly m3 = comp([](const Mat2& m) { return m.m12; });
    return sub(mul(m1, m2), mul(m3, m3));
}

}  // namespace detail_series

inline SeriesCoefficients series_coefficients(const Hamiltonian& h, double t, int N,
                                              bool tables = true) {
    namespace ds = detail_series;
    if (N < 0) throw DomainError("series_coefficients: N >= 0");
    auto run = [&](int refine) {
        ds::Context cx = ds::context_for(h, t, refine);
        auto W = ds::coefficient_polys(cx, N);
        SeriesCoefficients out;
        out.t = t;
        for (auto& w : W) out.W.push_back(ds::eval(w, t));
        if (tables) {
            out.alpha.assign(N + 1, std::vector<Mat2>(N + 1));
            out.beta.assign(N + 1, std::vector<Mat2>(N + 1));
            for (int n = 0; n <= N; ++n)
                for (int m = 0; m <= N; ++m) {
                    out.alpha[n][m] = ds::eval(
                        ds::integrate(ds::mul(ds::mul(W[n], cx.H), ds::transpose(W[m]))), t);
                    out.beta[n][m] = out.W[n] * mat2_J * out.W[m].transpose();
                }
        }
        return out;
    };
    const bool exact = h.panels() || h.powers() ||
                       (h.constant_between_knots() && !h.knots_accumulate_left());
    if (exact) return run(0);
    // refine the surrogate until the top coefficient stabilises
    SeriesCoefficients prev = run(256);
    for (int refine = 512; refine <= 16384; refine *= 2) {
        SeriesCoefficients cur = run(refine);
        double diff = 0.0, scale = 0.0;
        for (int n = 0; n <= N; ++n) {
            diff = std::max(diff, max_abs(cur.W[n] - prev.W[n]));
            scale = std::max(scale, max_abs(cur.W[n]));
        }
        if (diff <= 1e-8 * std::max(scale, 1.0)) return cur;
        prev = std::move(cur);
    }
    throw QuadratureError("series_coefficients: refinement did not stabilise");
}

// ---- coefficient bound verification ----------------------------------------

struct BoundViolation {
    std::string rule;
    int n, m;
    Mat2 lhs, rhs;
};

struct BoundReport {
    bool ok = true;
    int checks = 0;
    std::vector<BoundViolation> violations;

    void record(bool pass, const std::string& rule, int n, int m, const Mat2& lhs,
                const Mat2& rhs) {
        ++checks;
        if (!pass) {
            ok = false;
            violations.push_back({rule, n, m, lhs, rhs});
        }
    }
};

/// Entrywise estimates and identities for the series coefficients at t:
///   |W_n|        <= m+^{n-1} M+ |J|                       (n >= 1)
///   |alpha_nm|   <= m+^{n+m} M+
///   |beta_{2k+1,2l+1}| <= det M (1+3(k+l)) m+^{2(k+l)-1} M+   ((k,l) != (0,0))
///   alpha_{n,m+1} - alpha_{n+1,m} = beta_{n+1,m+1};  alpha_{n,0} = beta_{n+1,0}
///   the two partial-integration identities for alpha_{n,m} and W_n
///   (M+ |J|)^n M+ = m+^n M+.
inline BoundReport verify_coefficient_bounds(const Hamiltonian& h, double t, int N = 8) {
    namespace ds = detail_series;
    if (N > 10) throw DomainError("verify_coefficient_bounds: N capped at 10");
    const bool exact = h.panels() || h.powers() ||
                       (h.constant_between_knots() && !h.knots_accumulate_left());
    ds::Context cx = ds::context_for(h, t, exact ? 0 : 2048);
    auto W = ds::coefficient_polys(cx, N);
    ds::PPoly detP = ds::det_poly(cx);

    std::vector<Mat2> Wt;
    for (auto& w : W) Wt.push_back(ds::eval(w, t));
    const Mat2 M = ds::eval(cx.M, t);
    const double m1 = M.m11, m2 = M.m22;
    const double root = std::sqrt(std::max(0.0, m1 * m2));
    const Mat2 Mplus{m1, root, root, m2};
    const double mplus = 2.0 * root;
    const double detM = ds::eval(detP, t).m11;

    BoundReport rep;
    const double slack = 1e-12;
    auto leq = [&](const Mat2& l, const Mat2& r) {
        return leq_entrywise(l, r, slack * (1.0 + max_abs(r)));
    };
    auto close = [&](const Mat2& l, const Mat2& r, double scale) {
        return max_abs(l - r) <= 1e-10 * (1.0 + scale);
    };

    // crude entrywise estimate on |W_n|
    for (int n = 1; n <= N; ++n) {
        const Mat2 rhs = std::pow(mplus, n - 1) * (Mplus * mat2_absJ);
        rep.record(leq(abs_entrywise(Wt[n]), rhs), "series coefficient bound", n, -1,
                   abs_entrywise(Wt[n]), rhs);
    }

    // tables
    std::vector<std::vector<Mat2>> alpha(N + 1, std::vector<Mat2>(N + 1));
    std::vector<std::vector<Mat2>> beta(N + 1, std::vector<Mat2>(N + 1));
    for (int n = 0; n <= N; ++n)
        for (int m = 0; m <= N; ++m) {
            alpha[n][m] =
                ds::eval(ds::integrate(ds::mul(ds::mul(W[n], cx.H), ds::transpose(W[m]))), t);
            beta[n][m] = Wt[n] * mat2_J * Wt[m].transpose();
        }

    for (int n = 0; n <= N; ++n)
        for (int m = 0; m <= N; ++m) {
            const Mat2 rhs = std::pow(mplus, n + m) * Mplus;
            rep.record(leq(abs_entrywise(alpha[n][m]), rhs), "bilinear table bound", n, m,
                       abs_entrywise(alpha[n][m]), rhs);
        }

    for (int k = 0; 2 * k + 1 <= N; ++k)
        for (int l = 0; 2 * l + 1 <= N; ++l) {
            if (k == 0 && l == 0) continue;
            const Mat2 rhs =
                (detM * (1.0 + 3.0 * (k + l)) * std::pow(mplus, 2 * (k + l) - 1)) * Mplus;
            rep.record(leq(abs_entrywise(beta[2 * k + 1][2 * l + 1]), rhs),
                       "odd-odd refined bound", 2 * k + 1, 2 * l + 1,
                       abs_entrywise(beta[2 * k + 1][2 * l + 1]), rhs);
        }

    // alpha/beta relations
    for (int n = 0; n + 1 <= N; ++n)
        for (int m = 0; m + 1 <= N; ++m) {
            const Mat2 lhs = alpha[n][m + 1] - alpha[n + 1][m];
            rep.record(close(lhs, beta[n + 1][m + 1], max_abs(alpha[n][m + 1])),
                       "table difference identity", n, m, lhs, beta[n + 1][m + 1]);
        }
    for (int n = 0; n + 1 <= N; ++n) {
        rep.record(close(alpha[n][0], beta[n + 1][0], max_abs(alpha[n][0])),
                   "first column identity", n, 0, alpha[n][0], beta[n + 1][0]);
        rep.record(close(alpha[0][n], -beta[0][n + 1], max_abs(alpha[0][n])),
                   "first row identity", 0, n, alpha[0][n], -(beta[0][n + 1]));
    }

    // partial integration identities
    for (int n = 1; n <= N; ++n)
        for (int m = 1; m <= N; ++m) {
            const Mat2 boundary = Wt[n] * Wt[1] * mat2_J * Wt[m].transpose();
            const Mat2 i1 = ds::eval(
                ds::integrate(ds::mul(ds::mul(ds::mul(W[n], W[1]), cx.H), ds::transpose(W[m - 1]))),
                t);
            const Mat2 i2 = ds::eval(
                ds::integrate(ds::mul(ds::mul(W[n - 1], cx.H),
                                      ds::transpose(ds::mul(W[m], W[1])))),
                t);
            const Mat2 rhs = boundary + i1 + i2;
            rep.record(close(alpha[n][m], rhs, max_abs(rhs)), "partial integration (table)", n,
                       m, alpha[n][m], rhs);
        }
    for (int n = 3; n <= N; ++n) {
        const ds::PPoly JW1T = ds::lmul(mat2_J, ds::transpose(W[1]));
        const ds::PPoly JHJ = ds::lmul(mat2_J, ds::rmul(cx.H, mat2_J));
        const Mat2 term3 =
            ds::eval(ds::integrate(ds::rmul(ds::mul(detP, ds::mul(W[n - 3], cx.H)), mat2_J)), t);
        const Mat2 term4 =
            ds::eval(ds::integrate(ds::mul(ds::mul(W[n - 2], JW1T), JHJ)), t);
        const Mat2 rhs = Wt[n - 1] * Wt[1] + detM * Wt[n - 2] + term3 - term4;
        rep.record(close(Wt[n], rhs, max_abs(rhs)), "partial integration (coefficient)", n, -1,
                   Wt[n], rhs);
    }

    // rank-one absorption of M+: (M+|J|)^n M+ = m+^n M+
    for (int n = 1; n <= N; ++n) {
        Mat2 acc = Mplus;
        for (int i = 0; i < n; ++i) acc = (Mplus * mat2_absJ) * acc;
        const Mat2 rhs = std::pow(mplus, n) * Mplus;
        rep.record(close(acc, rhs, max_abs(rhs)), "rank-one power identity", n, -1, acc, rhs);
    }
    return rep;
}

}  // namespace canweyl
