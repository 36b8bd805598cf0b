#include <catch2/catch_amalgamated.hpp>

#include "canweyl/core.hpp"
#include "canweyl/quadrature.hpp"
#include "oracle.hpp"

using namespace canweyl;

TEST_CASE("matrix basics") {
    const Mat2 u{1, 2, 3, 4};
    CHECK(u.det() == -2.0);
    CHECK(u.trace() == 5.0);
    const Mat2 id = u * Mat2{-2.0, 1.0, 1.5, -0.5};
    CHECK(max_abs(id - mat2_identity) < 1e-15);
    CHECK(mat2_J.det() == 1.0);
    CHECK((mat2_J * mat2_J + mat2_identity).m11 == 0.0);
}

TEST_CASE("entrywise modulus and order") {
    CHECK(abs_entrywise(Mat2{-1, 2, 3, -4}).m11 == 1.0);
    CHECK(abs_entrywise(Mat2{-1, 2, 3, -4}).m22 == 4.0);
    CHECK(leq_entrywise(Mat2{1, 1, 1, 1}, Mat2{1, 2, 1, 1}));
    CHECK_FALSE(leq_entrywise(Mat2{1, 3, 1, 1}, Mat2{1, 2, 1, 1}));
}

TEST_CASE("entrywise rules on random matrices") {
    std::mt19937 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const CMat2 u = oracle::random_cmat(rng), v = oracle::random_cmat(rng);
        // |U+V| <= |U| + |V| and |UV| <= |U||V|
        CHECK(leq_entrywise(abs_entrywise(u + v), abs_entrywise(u) + abs_entrywise(v), 1e-14));
        CHECK(leq_entrywise(abs_entrywise(u * v), abs_entrywise(u) * abs_entrywise(v), 1e-14));
        // |zU| = |z||U|
        const complex z(0.3, -1.7);
        CHECK(max_abs(abs_entrywise(z * u) - std::abs(z) * abs_entrywise(u)) < 1e-14);
    }
}

TEST_CASE("entrywise order is compatible with shifts, scaling, and integration") {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> uu(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Mat2 u{uu(rng), uu(rng), uu(rng), uu(rng)};
        Mat2 d{std::abs(uu(rng)), std::abs(uu(rng)), std::abs(uu(rng)), std::abs(uu(rng))};
        const Mat2 v = u + d;  // u <= v by construction
        REQUIRE(leq_entrywise(u, v));
        const Mat2 w{uu(rng), uu(rng), uu(rng), uu(rng)};
        CHECK(leq_entrywise(u + w, v + w, 1e-15));
        CHECK(leq_entrywise(2.5 * u, 2.5 * v, 1e-15));
        // |U| <= |U'| and |V| <= |V'|  =>  |U+V| <= |U'|+|V'| and |UV| <= |U'||V'|
        const Mat2 up = abs_entrywise(u) + Mat2{0.1, 0, 0, 0.1};
        const Mat2 vp = abs_entrywise(v) + Mat2{0, 0.1, 0.1, 0};
        CHECK(leq_entrywise(abs_entrywise(u + v), up + vp, 1e-15));
        CHECK(leq_entrywise(abs_entrywise(u * v), up * vp, 1e-15));
    }
}

TEST_CASE("trace-free exponential matches the Taylor oracle") {
    std::mt19937 rng(9);
    for (int i = 0; i < 200; ++i) {
        CMat2 b = oracle::random_cmat(rng, 2.0);
        const complex half_tr = 0.5 * b.trace();
        b.m11 -= half_tr;
        b.m22 -= half_tr;  // make trace-free
        const CMat2 got = expm_tracefree(b);
        const CMat2 want = oracle::expm(b);
        CHECK(max_abs(got - want) < 1e-11 * (1.0 + max_abs(want)));
        CHECK(std::abs(got.det() - 1.0) < 1e-13 * (1.0 + max_abs(got)));
    }
}

TEST_CASE("quadrature against closed forms and the Simpson oracle") {
    auto r1 = integrate([](double t) { return t * t; }, 0.0, 3.0);
    CHECK(r1.value == Catch::Approx(9.0).epsilon(1e-13));
    auto r2 = integrate([](double t) { return std::exp(-t); }, 0.0, 20.0);
    CHECK(r2.value == Catch::Approx(1.0 - std::exp(-20.0)).epsilon(1e-12));
    auto f = [](double t) { return std::sqrt(std::abs(t)) * std::cos(3.0 * t); };
    auto r3 = integrate(f, -1.0, 2.0, 1e-12);
    CHECK(r3.value == Catch::Approx(oracle::quad(f, -1.0, 2.0, 1e-14)).margin(1e-10));

    // mapped tail: int_1^inf dt/t^2 = 1
    auto r4 = integrate_to_infinity([](double t) { return 1.0 / (t * t); }, 1.0, 2.0);
    CHECK(r4.value == Catch::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("endpoint refinement verdicts on power integrands") {
    auto conv = endpoint_refinement_verdict([](double t) { return std::pow(t, -0.5); }, 0.0, 1.0);
    CHECK(conv == IntegralVerdict::Convergent);
    auto div = endpoint_refinement_verdict([](double t) { return std::pow(t, -1.5); }, 0.0, 1.0);
    CHECK(div == IntegralVerdict::Divergent);
}

TEST_CASE("tail convergence verdicts") {
    CHECK(tail_convergence_verdict([](double t) { return 1.0 / (t * t); }, 1.0) ==
          IntegralVerdict::Convergent);
    CHECK(tail_convergence_verdict([](double t) { return 1.0 / t; }, 1.0) ==
          IntegralVerdict::Divergent);
}
