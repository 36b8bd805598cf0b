#pragma once

// Small fixed-size matrix algebra used throughout: real and complex 2x2
// matrices, the symplectic unit J, entrywise modulus / entrywise order,
// and the exponential of a trace-free matrix.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace canweyl {

using complex = std::complex<double>;

inline constexpr double inf = std::numeric_limits<double>::infinity();

template <class T>
struct M2 {
    T m11{}, m12{}, m21{}, m22{};

    friend M2 operator+(const M2& u, const M2& v) {
        return {u.m11 + v.m11, u.m12 + v.m12, u.m21 + v.m21, u.m22 + v.m22};
    }
    friend M2 operator-(const M2& u, const M2& v) {
        return {u.m11 - v.m11, u.m12 - v.m12, u.m21 - v.m21, u.m22 - v.m22};
    }
    friend M2 operator*(const M2& u, const M2& v) {
        return {u.m11 * v.m11 + u.m12 * v.m21, u.m11 * v.m12 + u.m12 * v.m22,
                u.m21 * v.m11 + u.m22 * v.m21, u.m21 * v.m12 + u.m22 * v.m22};
    }
    friend M2 operator*(const T& c, const M2& u) {
        return {c * u.m11, c * u.m12, c * u.m21, c * u.m22};
    }
    M2 operator-() const { return {-m11, -m12, -m21, -m22}; }

    T det() const { return m11 * m22 - m12 * m21; }
    T trace() const { return m11 + m22; }
    M2 transpose() const { return {m11, m21, m12, m22}; }
};

using Mat2  = M2<double>;
using CMat2 = M2<complex>;

inline constexpr Mat2 mat2_identity{1.0, 0.0, 0.0, 1.0};
inline constexpr Mat2 mat2_J{0.0, -1.0, 1.0, 0.0};     // J = [[0,-1],[1,0]]
inline constexpr Mat2 mat2_absJ{0.0, 1.0, 1.0, 0.0};

inline CMat2 to_complex(const Mat2& u) {
    return {complex(u.m11), complex(u.m12), complex(u.m21), complex(u.m22)};
}

inline CMat2 adjoint(const CMat2& u) {
    return {std::conj(u.m11), std::conj(u.m21), std::conj(u.m12), std::conj(u.m22)};
}

inline CMat2 operator*(const CMat2& u, const Mat2& v) { return u * to_complex(v); }
inline CMat2 operator*(const Mat2& u, const CMat2& v) { return to_complex(u) * v; }
inline CMat2 operator*(complex c, const Mat2& u) { return c * to_complex(u); }

/// Entrywise modulus |U|.
inline Mat2 abs_entrywise(const Mat2& u) {
    return {std::abs(u.m11), std::abs(u.m12), std::abs(u.m21), std::abs(u.m22)};
}
inline Mat2 abs_entrywise(const CMat2& u) {
    return {std::abs(u.m11), std::abs(u.m12), std::abs(u.m21), std::abs(u.m22)};
}

/// Entrywise order U <= V, with an absolute slack per entry.
inline bool leq_entrywise(const Mat2& u, const Mat2& v, double slack = 0.0) {
    return u.m11 <= v.m11 + slack && u.m12 <= v.m12 + slack &&
           u.m21 <= v.m21 + slack && u.m22 <= v.m22 + slack;
}

inline double max_abs(const Mat2& u) {
    return std::max(std::max(std::abs(u.m11), std::abs(u.m12)),
                    std::max(std::abs(u.m21), std::abs(u.m22)));
}
inline double max_abs(const CMat2& u) { return max_abs(abs_entrywise(u)); }

inline complex sinhc(complex s) {
    // sinh(s)/s, stable near 0
    if (std::abs(s) < 1e-4) {
        complex s2 = s * s;
        return 1.0 + s2 / 6.0 * (1.0 + s2 / 20.0 * (1.0 + s2 / 42.0));
    }
    return std::sinh(s) / s;
}

/// exp(B) for trace-free B: cosh(s) I + sinh(s)/s B with s^2 = -det B.
/// The result is exactly unimodular up to rounding.
inline CMat2 expm_tracefree(const CMat2& b) {
    complex s2 = -b.det();
    complex s  = std::sqrt(s2);
    complex ch = std::cosh(s);
    complex sc = sinhc(s);
    return {ch + sc * b.m11, sc * b.m12, sc * b.m21, ch + sc * b.m22};
}

inline bool is_finite(double x) { return std::isfinite(x); }

}  // namespace canweyl
