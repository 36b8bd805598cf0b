#pragma once

// Test-only oracles, kept independent of the library implementations:
// adaptive Simpson quadrature, Taylor-with-scaling matrix exponential, a
// fixed-step RK4 integrator for the transfer equation, and deterministic
// random fixtures.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "canweyl/core.hpp"
#include "canweyl/hamiltonian.hpp"

namespace oracle {

using canweyl::CMat2;
using canweyl::complex;
using canweyl::Mat2;

// ---- adaptive Simpson -------------------------------------------------------

template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double quad(const F& f, double a, double b, double tol = 1e-12, int depth = 48) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, std::max(tol, 1e-300), depth);
}

// ---- matrix exponential (Taylor + scaling/squaring) -------------------------

inline CMat2 expm(const CMat2& b) {
    double norm = canweyl::max_abs(b);
    int s = 0;
    CMat2 x = b;
    while (norm > 0.25) {
        x = complex(0.5) * x;
        norm *= 0.5;
        ++s;
    }
    CMat2 acc{1.0, 0.0, 0.0, 1.0};
    CMat2 term{1.0, 0.0, 0.0, 1.0};
    for (int k = 1; k <= 24; ++k) {
        term = complex(1.0 / k) * (term * x);
        acc = acc + term;
    }
    for (int i = 0; i < s; ++i) acc = acc * acc;
    return acc;
}

// ---- fixed-grid RK4 for W' = -z W H J ---------------------------------------

inline CMat2 transfer_rk4(const canweyl::Hamiltonian& h, double t0, double t1, complex z,
                          int steps) {
    CMat2 w{1.0, 0.0, 0.0, 1.0};
    auto rhs = [&](double t, const CMat2& v) {
        return complex(-1.0) * z * (v * (h.value(t) * canweyl::mat2_J));
    };
    const double dt = (t1 - t0) / steps;
    for (int i = 0; i < steps; ++i) {
        const double t = t0 + i * dt;
        const CMat2 k1 = rhs(t, w);
        const CMat2 k2 = rhs(t + 0.5 * dt, w + complex(0.5 * dt) * k1);
        const CMat2 k3 = rhs(t + 0.5 * dt, w + complex(0.5 * dt) * k2);
        const CMat2 k4 = rhs(t + dt, w + complex(dt) * k3);
        w = w + complex(dt / 6.0) * (k1 + complex(2.0) * k2 + complex(2.0) * k3 + k4);
    }
    return w;
}

// ---- random fixtures ---------------------------------------------------------

inline Mat2 random_psd(std::mt19937& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    // G^T G is PSD
    const Mat2 g{a, b, c, d};
    return scale * (g.transpose() * g);
}

inline CMat2 random_cmat(std::mt19937& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto c = [&]() { return complex(u(rng), u(rng)) * scale; };
    return {c(), c(), c(), c()};
}

inline canweyl::Hamiltonian random_piecewise(std::mt19937& rng, int min_panels = 2,
                                             int max_panels = 6) {
    std::uniform_int_distribution<int> np(min_panels, max_panels);
    std::uniform_real_distribution<double> len(0.2, 1.2);
    const int n = np(rng);
    std::vector<double> cuts;
    std::vector<Mat2> vals;
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i > 0) cuts.push_back(t);
        Mat2 v = random_psd(rng);
        // keep diagonals bounded away from zero so the start is regular
        v.m11 += 0.05;
        v.m22 += 0.05;
        vals.push_back(v);
        t += len(rng);
    }
    return canweyl::Hamiltonian::piecewise_constant(0.0, cuts, vals);
}

}  // namespace oracle
