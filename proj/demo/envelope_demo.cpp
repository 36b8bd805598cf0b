// Minimal usage example: two-sided envelope for |q(ir)| of a model field,
// checked against the certified solver value.

#include <cstdio>

#include "canweyl/canweyl.hpp"

int main() {
    using namespace canweyl;

    Hamiltonian h = corpus::tilted_power(2.0);
    EstimatorConfig cfg;  // q = 0.2

    std::printf("%10s %12s %12s %12s %12s %12s\n", "r", "lower", "|q(ir)|", "upper", "A(r)",
                "L(r)");
    for (double r = 1.0; r <= 1e4; r *= 10.0) {
        EstimateBundle b = estimate_bundle(h, r, {M_PI / 2}, cfg);
        CertifiedValue q = weyl_coefficient(h, complex(0.0, r), 1e-8);
        std::printf("%10.1e %12.5g %12.5g %12.5g %12.5g %12.5g\n", r, b.envelope[0].lower_abs,
                    std::abs(q.value), b.envelope[0].upper_abs, b.A, b.L);
    }
    return 0;
}
