#include "rcsbp/errors.hpp"
#include "rcsbp/roots.hpp"

#include <doctest.h>

#include <cmath>

using namespace rcsbp;

TEST_CASE("bracketed Newton on an increasing function") {
    auto f = [](double x) { return x * x * x - 2.0; };
    auto df = [](double x) { return 3.0 * x * x; };
    const double r = bracketed_newton(f, df, 0.0, 2.0);
    CHECK(r == doctest::Approx(std::cbrt(2.0)).epsilon(1e-12));
}

TEST_CASE("bracketed Newton survives a bad derivative") {
    // flat derivative at the left end would throw Newton out of the bracket
    auto f = [](double x) { return std::atan(x - 1.0); };
    auto df = [](double x) { return 1.0 / (1.0 + (x - 1.0) * (x - 1.0)); };
    CHECK(bracketed_newton(f, df, -30.0, 40.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("convex right root picks the larger root") {
    // x^2 - 3x has roots 0 and 3; target 0 -> 3
    auto f = [](double x) { return x * x - 3.0 * x; };
    auto df = [](double x) { return 2.0 * x - 3.0; };
    CHECK(convex_right_root(f, df, 0.0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(convex_right_root(f, df, 4.0) == doctest::Approx(4.0).epsilon(1e-12));
    // bracket growth to a far root
    auto g = [](double x) { return 0.5 * x * x; };
    auto dg = [](double x) { return x; };
    CHECK(convex_right_root(g, dg, 5e5) == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("convex right root at a double root") {
    auto f = [](double x) { return x * x; };
    auto df = [](double x) { return 2.0 * x; };
    CHECK(std::abs(convex_right_root(f, df, 0.0)) < 1e-6);
}

TEST_CASE("bisection") {
    CHECK(bisect([](double x) { return std::cos(x); }, 0.0, 3.0) == doctest::Approx(M_PI / 2).epsilon(1e-13));
    CHECK_THROWS_AS(bisect([](double x) { return x * x + 1.0; }, -1.0, 1.0), DomainError);
}
