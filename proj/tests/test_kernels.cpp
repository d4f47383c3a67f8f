#include <doctest.h>

#include <cmath>

#include "tvreg/common.hpp"
#include "tvreg/kernels.hpp"

using namespace tvreg;

namespace {

// Closed-form convolution K*(x) for the parabolic kernel, derived by
// expanding int_{-1}^{1-u} 0.5625 (1-v^2)(1-(v+u)^2) dv with u = 2|x|:
//   C(u) = 3/5 - (3/4)u^2 + (3/8)u^3 - (3/160)u^5 on [0,2].
double epa_kstar(double x) {
    const double a = std::fabs(x);
    if (a >= 1.0) return 0.0;
    return 0.6 - 3.0 * a * a + 3.0 * a * a * a - 0.6 * std::pow(a, 5);
}

// Triangle kernel convolution, piecewise cubic in u = 2|x|:
//   C(u) = 2/3 - u^2 + u^3/2 on [0,1],  (2-u)^3/6 on [1,2].
double bart_kstar(double x) {
    const double u = 2.0 * std::fabs(x);
    if (u >= 2.0) return 0.0;
    if (u <= 1.0) return 2.0 / 3.0 - u * u + 0.5 * u * u * u;
    const double s = 2.0 - u;
    return s * s * s / 6.0;
}

} // namespace

TEST_CASE("simpson rule handles polynomials and smooth integrands") {
    CHECK(std::fabs(simpson(0.0, 1.0, 2, [](double x) { return x * x; }) - 1.0 / 3.0) < 1e-15);
    CHECK(std::fabs(simpson(0.0, 3.141592653589793, 512, [](double x) { return std::sin(x); }) -
                    2.0) < 1e-10);
    // Odd panel counts are rounded up to even and still integrate exactly.
    CHECK(std::fabs(simpson(-1.0, 2.0, 3, [](double x) { return x * x * x; }) - 3.75) < 1e-12);
}

TEST_CASE("built-in kernel constants match closed forms") {
    const KernelConstants e = kernel_constants(Kernel::epanechnikov());
    CHECK(std::fabs(e.kappa2 - 0.2) < 1e-8);
    CHECK(std::fabs(e.K2 - 0.6) < 1e-8);
    CHECK(std::fabs(e.KstarAt0 - 0.6) < 1e-8);
    CHECK(std::fabs(e.Kstar2 - 167.0 / 770.0) < 1e-8);

    const KernelConstants b = kernel_constants(Kernel::bartlett());
    CHECK(std::fabs(b.kappa2 - 1.0 / 6.0) < 1e-8);
    CHECK(std::fabs(b.K2 - 2.0 / 3.0) < 1e-8);
    CHECK(std::fabs(b.KstarAt0 - 2.0 / 3.0) < 1e-8);
    CHECK(std::fabs(b.Kstar2 - 151.0 / 630.0) < 1e-8);
}

TEST_CASE("kernel constants are stable under quadrature refinement") {
    for (const Kernel& k : {Kernel::epanechnikov(), Kernel::bartlett()}) {
        const KernelConstants c1 = kernel_constants(k, 2048);
        const KernelConstants c2 = kernel_constants(k, 4096);
        CHECK(std::fabs(c1.kappa2 - c2.kappa2) < 1e-9);
        CHECK(std::fabs(c1.K2 - c2.K2) < 1e-9);
        CHECK(std::fabs(c1.Kstar2 - c2.Kstar2) < 1e-8);
    }
}

TEST_CASE("kstar_eval matches the closed-form convolutions pointwise") {
    const Kernel epa = Kernel::epanechnikov();
    const Kernel bart = Kernel::bartlett();
    for (double x : {0.0, 0.15, 0.3, 0.45, 0.6, 0.85, 0.999}) {
        CHECK(std::fabs(kstar_eval(epa, x, 4096) - epa_kstar(x)) < 1e-8);
        // The triangle kernel's kinks slow Simpson convergence, so refine further.
        CHECK(std::fabs(kstar_eval(bart, x, 32768) - bart_kstar(x)) < 1e-8);
        CHECK(std::fabs(kstar_eval(epa, -x, 4096) - epa_kstar(x)) < 1e-8);
    }
    CHECK(kstar_eval(epa, 1.0, 512) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("kernels vanish outside the support") {
    const Kernel epa = Kernel::epanechnikov();
    const Kernel bart = Kernel::bartlett();
    for (double v : {-5.0, -1.0000001, 1.0000001, 2.0, 100.0}) {
        CHECK(epa(v) == 0.0);
        CHECK(bart(v) == 0.0);
    }
    CHECK(epa(0.0) == doctest::Approx(0.75));
    CHECK(bart(0.0) == doctest::Approx(1.0));
    CHECK(epa(0.5) == doctest::Approx(0.75 * 0.75));
    CHECK(bart(-0.25) == doctest::Approx(0.75));
}

TEST_CASE("by_name resolves built-ins and rejects unknown names") {
    CHECK(Kernel::by_name("epanechnikov").kind() == KernelKind::epanechnikov);
    CHECK(Kernel::by_name("bartlett").kind() == KernelKind::bartlett);
    CHECK_THROWS_AS(Kernel::by_name("gaussian"), config_error);
    CHECK_THROWS_AS(Kernel::by_name(""), config_error);
}

TEST_CASE("custom kernels are validated and measured correctly") {
    // Quartic kernel: kappa2 = 1/7, K2 = 5/7.
    const Kernel quartic = Kernel::custom([](double v) {
        const double u = 1.0 - v * v;
        return u > 0.0 ? 0.9375 * u * u : 0.0;
    });
    const KernelConstants c = kernel_constants(quartic, 4096);
    CHECK(std::fabs(c.kappa2 - 1.0 / 7.0) < 1e-8);
    CHECK(std::fabs(c.K2 - 5.0 / 7.0) < 1e-8);

    CHECK_THROWS_AS(Kernel::custom([](double v) { return v > 0.0 ? 1.0 : 0.0; }), config_error);
    CHECK_THROWS_AS(Kernel::custom([](double v) { return 0.2 * (1.0 - std::fabs(v)); }),
                    config_error);
}
