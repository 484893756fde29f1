#include "rcsbp/errors.hpp"
#include "rcsbp/mechanism.hpp"
#include "rcsbp/pathsim.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

using namespace rcsbp;

namespace {

BranchingMechanism make(double beta, double gamma, double sigma2, JumpMeasure j = {}) {
    BranchingMechanism m;
    m.beta = beta;
    m.gamma = gamma;
    m.sigma2 = sigma2;
    m.jumps = j;
    return m;
}

struct Moments {
    double mean = 0.0;
    double se = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return m;
}

// Left-constant value of a sampled path at time t.
double value_at(const PathSample& p, double t) {
    const auto it = std::upper_bound(p.times.begin(), p.times.end(), t + 1e-12);
    return p.values[static_cast<std::size_t>(it - p.times.begin()) - 1];
}

} // namespace

TEST_CASE("per-path generators are reproducible and distinct") {
    auto a = path_rng(7, 3);
    auto b = path_rng(7, 3);
    auto c = path_rng(7, 4);
    auto d = path_rng(8, 3);
    const auto va = a();
    CHECK(va == b());
    CHECK(va != c());
    CHECK(va != d());
}

TEST_CASE("worker count honours the environment") {
    setenv("REFRACT_THREADS", "3", 1);
    CHECK(worker_count(100) == 3);
    CHECK(worker_count(2) == 2);
    unsetenv("REFRACT_THREADS");
    CHECK(worker_count(100) >= 1);
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

TEST_CASE("same seed, same path") {
    const BranchingMechanism m = make(0, 1, 1, JumpMeasure::exponential(1.0, 0.5));
    const PathSample p = simulate_refracted(m, {0.5, 1.0}, 0.5, 2.0, 1e-3, 42);
    const PathSample q = simulate_refracted(m, {0.5, 1.0}, 0.5, 2.0, 1e-3, 42);
    CHECK(p.values == q.values);
    CHECK(p.times == q.times);
}

TEST_CASE("path invariants on the Levy clock") {
    const BranchingMechanism m = make(0, 1, 1, JumpMeasure::exponential(2.0, 0.5));
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const PathSample p = simulate_refracted(m, {0.5, 1.0}, 0.4, 5.0, 1e-3, seed);
        CHECK(p.clock == Clock::LevyTime);
        REQUIRE(p.times.size() == p.values.size());
        CHECK(p.values.front() == 0.4);
        for (std::size_t i = 1; i < p.times.size(); ++i) CHECK(p.times[i] > p.times[i - 1]);
        double biggest = 0.0;
        for (const JumpEvent& j : p.jumps) {
            CHECK(j.size > 0.0);
            if (!p.hit_zero_at || j.time <= *p.hit_zero_at) biggest = std::max(biggest, j.size);
        }
        CHECK(p.max_jump == biggest);
        if (p.hit_zero_at) CHECK(p.values.back() <= 1e-9);
    }
}

TEST_CASE("deterministic refracted drift") {
    // sigma2 = 0, no jumps, D = -1: slope -1 above b and -1 + 0.6 below
    const BranchingMechanism m = make(0, -1, 0);
    const double b = 1.0, delta = 0.6, x0 = 2.0;
    const PathSample p = simulate_refracted(m, {delta, b}, x0, 10.0, 1e-2, 1);
    const double t_b = (x0 - b) / 1.0;
    const double t_0 = t_b + b / (1.0 - delta);
    for (double t : {0.5, 1.0, 1.3, 2.0, 3.0}) {
        const double expected = t <= t_b ? x0 - t : b - (1.0 - delta) * (t - t_b);
        CHECK(value_at(p, t) == doctest::Approx(expected).epsilon(1e-10));
    }
    REQUIRE(p.hit_zero_at);
    CHECK(*p.hit_zero_at == doctest::Approx(t_0).epsilon(1e-9));
}

TEST_CASE("mean increment of the plain scheme") {
    // delta = 0, started far from 0: E[U_T - x0] = -T psi'(0+)
    const BranchingMechanism m = make(0, 0.4, 1, JumpMeasure::exponential(1.0, 0.5));
    const double x0 = 30.0, T = 1.0;
    std::vector<double> inc;
    for (std::uint64_t i = 0; i < 20000; ++i) {
        SimulationOptions o;
        o.horizon = T;
        o.dt = 1e-2;
        auto rng = path_rng(99, i);
        const PathSample p = simulate_refracted(m, {0.0, 0.0}, x0, o, rng);
        inc.push_back(p.values.back() - x0);
    }
    const Moments mo = moments(inc);
    const double expected = -T * plain_exponent(m).derivative(0.0);
    CHECK(std::abs(mo.mean - expected) <= 3.0 * mo.se);
}

TEST_CASE("threshold far above the path is a drift shift") {
    const BranchingMechanism m = make(0, 1, 1, JumpMeasure::exponential(1.0, 0.5));
    BranchingMechanism shifted = m;
    shifted.gamma += 0.5;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const PathSample p = simulate_refracted(m, {0.5, 1e6}, 0.8, 2.0, 1e-3, seed);
        const PathSample q = simulate_refracted(shifted, {0.0, 0.0}, 0.8, 2.0, 1e-3, seed);
        REQUIRE(p.values.size() == q.values.size());
        for (std::size_t i = 0; i < p.values.size(); i += 50) {
            CHECK(p.values[i] == doctest::Approx(q.values[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("Lamperti transform of a deterministic path") {
    // U' = -1 above b, -0.4 below: V' = slope * V, piecewise exponential
    const BranchingMechanism m = make(0, -1, 0);
    const double b = 1.0, x0 = 2.0;
    const PathSample levy = simulate_refracted(m, {0.6, b}, x0, 10.0, 1e-4, 1);
    const PathSample v = lamperti_transform(levy, x0);
    CHECK(v.clock == Clock::BranchingTime);
    const double s_b = std::log(x0 / b);  // V reaches b
    for (double s : {0.2, 0.6, 1.0, 2.0, 4.0}) {
        const double expected = s <= s_b ? x0 * std::exp(-s) : b * std::exp(-0.4 * (s - s_b));
        CHECK(value_at(v, s) == doctest::Approx(expected).epsilon(1e-3));
    }
}

TEST_CASE("branching clock invariants and total progeny") {
    const BranchingMechanism m = make(0, -0.5, 1);
    int absorbed = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const PathSample levy = simulate_refracted(m, {0.3, 1.0}, 0.6, 200.0, 1e-3, seed);
        const PathSample v = lamperti_transform(levy, 0.6);
        for (std::size_t i = 1; i < v.times.size(); ++i) {
            CHECK(v.times[i] > v.times[i - 1]);
            CHECK(v.progeny[i] >= v.progeny[i - 1]);
        }
        for (double x : v.values) CHECK(x >= 0.0);
        if (levy.hit_zero_at) {
            ++absorbed;
            REQUIRE(v.hit_zero_at);
            for (std::size_t i = 0; i < v.times.size(); ++i) {
                if (v.times[i] > *v.hit_zero_at) CHECK(v.values[i] == 0.0);
            }
            CHECK(v.progeny.back() == *levy.hit_zero_at);
        }
    }
    CHECK(absorbed > 0);
}

TEST_CASE("branching-time Laplace transform of the plain CSBP") {
    // psi(u) = u^2/2 - u: u_t' = u_t - u_t^2/2, so u_t = 2 / (1 + (2/lambda - 1) e^{-t})
    const BranchingMechanism m = make(0, 1, 1);
    const double x0 = 1.0, lambda = 1.0;
    const std::vector<double> ts = {0.1, 0.3, 0.6};
    std::vector<std::vector<double>> samples(ts.size());
    for (std::uint64_t i = 0; i < 20000; ++i) {
        SimulationOptions o;
        o.horizon = 8.0;
        o.dt = 1e-3;
        auto rng = path_rng(2024, i);
        const PathSample levy = simulate_refracted(m, {0.0, 0.0}, x0, o, rng);
        const PathSample v = lamperti_transform(levy, x0);
        if (!levy.hit_zero_at) REQUIRE(v.times.back() >= ts.back());
        for (std::size_t k = 0; k < ts.size(); ++k) {
            const double vt = ts[k] > v.times.back() ? 0.0 : value_at(v, ts[k]);
            samples[k].push_back(std::exp(-lambda * vt));
        }
    }
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double u = 2.0 / (1.0 + (2.0 / lambda - 1.0) * std::exp(-ts[k]));
        const Moments mo = moments(samples[k]);
        CHECK(std::abs(mo.mean - std::exp(-x0 * u)) <= 3.0 * mo.se);
    }
}

TEST_CASE("generator: closed form against quadrature") {
    const std::vector<BranchingMechanism> models = {make(0, 1, 1), make(0.3, 1, 1, JumpMeasure::exponential(1.0, 0.5)),
                                                    make(0, -1, 0, JumpMeasure::fixed(1.0, 0.8)),
                                                    make(0, 1, 1, JumpMeasure::exponential(2.0, 1.5))};
    for (const BranchingMechanism& m : models) {
        for (double l : {0.5, 1.0, 2.0}) {
            const TestFunction closed = TestFunction::exponential(l);
            TestFunction general = closed;
            general.exp_rate.reset();
            for (double x : {0.2, 0.9, 1.0, 2.5}) {
                const RefractionSpec r{0.4, 1.0};
                CHECK(apply_generator(general, m, r, x) ==
                      doctest::Approx(apply_generator(closed, m, r, x)).epsilon(1e-9).scale(1e-12));
            }
        }
    }
}

TEST_CASE("generator reductions") {
    const BranchingMechanism m = make(0, 1, 1);
    const TestFunction f = TestFunction::exponential(1.5);
    CHECK(apply_generator(f, m, {0.5, 1.0}, 0.0) == 0.0);
    // delta = 0: x e^{-l x} psi(l)
    CHECK(apply_generator(f, m, {0.0, 1.0}, 0.7) == doctest::Approx(0.7 * std::exp(-1.05) * psi(m, 1.5)));
    // refraction only acts at or below b
    CHECK(apply_generator(f, m, {0.5, 1.0}, 1.2) == apply_generator(f, m, {0.0, 1.0}, 1.2));
}

TEST_CASE("martingale check at t = 0 and flatness") {
    const BranchingMechanism m = make(0, 1, 1);
    const TestFunction f = TestFunction::exponential(1.0);
    const MartingaleReport rep = martingale_check(f, m, {0.5, 1.0}, 0.5, {0.0, 0.25, 0.5}, 4000, 5);
    CHECK(rep.mean[0] == f.f(0.5));
    CHECK(rep.std_error[0] == 0.0);
    CHECK(rep.flatness <= 4.0);
    CHECK_THROWS_AS(martingale_check(f, m, {0.5, 1.0}, 0.5, {0.5, 0.25}, 10, 5), DomainError);
}

TEST_CASE("invalid models are rejected") {
    CHECK_THROWS_AS(simulate_refracted(make(0, -1, 0), {2.0, 1.0}, 0.5, 1.0, 1e-3, 1), ConfigError);
}
