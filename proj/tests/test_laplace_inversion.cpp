#include "rcsbp/laplace_inversion.hpp"

#include <doctest.h>

#include <cmath>

using namespace rcsbp;
using cld = std::complex<long double>;

TEST_CASE("inverts elementary transforms") {
    const EulerInverter inv;
    for (double t : {0.1, 1.0, 3.0}) {
        CHECK(inv.invert([](cld s) { return 1.0L / (s + 1.0L); }, t).value ==
              doctest::Approx(std::exp(-t)).epsilon(1e-8));
        CHECK(inv.invert([](cld s) { return 1.0L / (s * s); }, t).value == doctest::Approx(t).epsilon(1e-8));
        CHECK(inv.invert([](cld s) { return 1.0L / s; }, t).value == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("oscillating original") {
    const EulerInverter inv;
    for (double t : {0.5, 2.0}) {
        const auto r = inv.invert([](cld s) { return 1.0L / (s * s + 1.0L); }, t);
        CHECK(std::abs(r.value - std::sin(t)) < 1e-7);
    }
}

TEST_CASE("error estimate reflects accuracy") {
    const EulerInverter inv;
    const auto r = inv.invert([](cld s) { return 1.0L / (s + 2.0L); }, 1.5);
    CHECK(r.error_estimate < 1e-8);
    CHECK(std::abs(r.value - std::exp(-3.0)) < 1e-8);
}

TEST_CASE("more terms do not hurt a smooth original") {
    const EulerInverter a(11, 8.0);
    const EulerInverter b(21, 12.0);
    auto F = [](cld s) { return 1.0L / ((s + 1.0L) * (s + 3.0L)); };
    const double exact = 0.5 * (std::exp(-0.7) - std::exp(-2.1));
    CHECK(std::abs(b.invert(F, 0.7).value - exact) <= std::abs(a.invert(F, 0.7).value - exact) + 1e-12);
    CHECK(a.terms() == 11);
    CHECK(b.precision() == 12.0);
}
