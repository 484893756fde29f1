#pragma once

#include "rcsbp/mechanism.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rcsbp {

/// Independent generator for path `index` of a run seeded with `seed`:
/// mt19937_64 initialised from seed_seq{seed_lo, seed_hi, index_lo, index_hi}.
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index);

/// Worker count: REFRACT_THREADS if set and positive, else the hardware
/// concurrency, never more than `tasks`.
int worker_count(std::size_t tasks);

/// Runs body(i) for i in [0, n) on worker_count(n) threads. Bodies must only
/// write to their own slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

enum class Clock { LevyTime, BranchingTime };

std::string to_string(Clock clock);

struct JumpEvent {
    double time;
    double size;
};

struct PathSample {
    Clock clock = Clock::LevyTime;
    std::vector<double> times;
    std::vector<double> values;
    std::vector<JumpEvent> jumps;
    std::optional<double> hit_zero_at;
    std::optional<double> crossed_a_at;
    std::optional<double> killed_at;
    /// Running total progeny on the branching clock (empty on the Levy clock).
    std::vector<double> progeny;
    /// Largest jump before absorption (or before the end of the path).
    double max_jump = 0.0;
    bool clock_overflow = false;
    double dt = 0.0;
};

struct SimulationOptions {
    double dt = 1e-3;
    double horizon = 200.0;
    double eps0 = 1e-9;
    /// Upper level a whose first passage is recorded; infinity disables it.
    double upper_level = kInf;
    /// Stop as soon as the upper level is passed.
    bool stop_at_upper = false;
    /// Stop (flagged as escaped) once the path reaches this level.
    double escape_level = kInf;
    /// Simulate the killing clock at rate beta.
    bool kill = true;
    /// Brownian-bridge test for barrier crossings inside an Euler step.
    bool bridge = true;
};

/// Euler scheme for Ubar_t = x0 + int (D + delta 1{Ubar_s < b}) ds + sigma B_t
/// + compound Poisson jumps, on the Levy clock, absorbed once Ubar <= eps0.
/// Jump and killing times are exact exponential clocks; steps are cut at
/// them. Throws ConfigError if the refracted model is invalid.
PathSample simulate_refracted(const BranchingMechanism& mech, const RefractionSpec& refraction, double x0,
                              const SimulationOptions& opts, std::mt19937_64& rng);
PathSample simulate_refracted(const BranchingMechanism& mech, const RefractionSpec& refraction, double x0,
                              double horizon, double dt, std::uint64_t seed);

struct LampertiOptions {
    /// Branching-clock spacing; 0 means the Levy-clock dt of the input path.
    double ds = 0.0;
    /// Branching horizon; 0 means the whole path.
    double horizon = 0.0;
    /// Maximal value of the additive functional i before ClockOverflow.
    double clock_cap = 1e7;
};

/// V = Ubar o c with c the inverse of i_t = int_0^t ds / Ubar_s.
PathSample lamperti_transform(const PathSample& levy_path, double x0, const LampertiOptions& opts = {});

/// Summary of one path sufficient for every Monte Carlo estimator.
struct PathOutcome {
    bool absorbed = false;
    double absorbed_at = kInf;  ///< Levy clock, equal to the total progeny
    bool crossed = false;
    double crossed_at = kInf;   ///< first passage above the upper level
    bool killed = false;
    double killed_at = kInf;
    bool escaped = false;
    bool unresolved = false;    ///< horizon reached with none of the above
    double max_jump = 0.0;      ///< largest jump before the path stopped
};

PathOutcome simulate_outcome(const BranchingMechanism& mech, const RefractionSpec& refraction, double x0,
                             const SimulationOptions& opts, std::mt19937_64& rng);

struct TestFunction {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;
    /// Set when f(x) = exp(-rate x); enables the closed-form generator.
    std::optional<double> exp_rate;

    static TestFunction exponential(double rate);
};

/// A[f](x) = x [Gamma f(x) + delta 1{x<=b} f'(x)] with
/// Gamma f = -beta f + D f' + (sigma2/2) f'' + int (f(x+z) - f(x)) Pi(dz).
double apply_generator(const TestFunction& f, const BranchingMechanism& mech, const RefractionSpec& refraction,
                       double x);

struct MartingaleReport {
    std::vector<double> t;
    std::vector<double> mean;
    std::vector<double> std_error;
    double f_x0 = 0.0;
    /// max over t with SE > 0 of |mean(t) - f(x0)| / SE(t).
    double flatness = 0.0;
    std::size_t n_paths = 0;
};

/// Monte Carlo estimate of E[N_t] for
///   N_t = exp(-beta J_t) f(V_t) - int_0^t exp(-beta J_s) A[f](V_s) ds
/// along the unkilled path, A the generator of apply_generator (which
/// carries the -beta f term). Requires f to have exp_rate set.
MartingaleReport martingale_check(const TestFunction& f, const BranchingMechanism& mech,
                                  const RefractionSpec& refraction, double x0, const std::vector<double>& t_grid,
                                  std::size_t paths, std::uint64_t seed, double dt = 1e-3);

} // namespace rcsbp
