#pragma once

#include "rcsbp/mechanism.hpp"
#include "rcsbp/pathsim.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rcsbp {

struct MCEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double horizon_bias_bound = 0.0;
};

enum class FunctionalKind { ExitDown, ExitUp, Vanish, SupBelow, MaxJumpCDF, ExtinctionTransform };

std::string to_string(FunctionalKind kind);

/// A Monte Carlo target. `q` is used by the transforms, `a` by the exit
/// and sup-level events, `y` by the maximal-jump CDF.
struct FunctionalSpec {
    FunctionalKind kind = FunctionalKind::Vanish;
    double q = 0.0;
    double a = kInf;
    double y = 0.0;

    static FunctionalSpec exit_down(double q, double a) { return {FunctionalKind::ExitDown, q, a, 0.0}; }
    static FunctionalSpec exit_up(double q, double a) { return {FunctionalKind::ExitUp, q, a, 0.0}; }
    static FunctionalSpec vanish() { return {FunctionalKind::Vanish, 0.0, kInf, 0.0}; }
    static FunctionalSpec sup_below(double a) { return {FunctionalKind::SupBelow, 0.0, a, 0.0}; }
    static FunctionalSpec max_jump_cdf(double y) { return {FunctionalKind::MaxJumpCDF, 0.0, kInf, y}; }
    static FunctionalSpec extinction_transform(double q) {
        return {FunctionalKind::ExtinctionTransform, q, kInf, 0.0};
    }
    /// True for targets that only need the path up to the first exit from (0, a).
    bool two_sided() const;
};

struct MCConfig {
    double dt = 1e-3;
    double horizon = 200.0;
    double eps0 = 1e-9;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
    /// Paths stop once absorption has probability below this; the escape
    /// level is max(b, x0) + log(1/escape_tolerance) / Phi(0).
    double escape_tolerance = 1e-6;
    bool bridge = true;
};

/// Outcomes of n_paths independent paths from x0, in path order.
struct Ensemble {
    std::vector<PathOutcome> outcomes;
    /// Level at which the upper passage was recorded (infinity if none).
    double upper_level = kInf;
    bool stopped_at_upper = false;
    double escape_level = kInf;
    /// Phi(0) of the plain exponent, used in the escape bias term.
    double phi0 = 0.0;
    double b = 0.0;
    std::uint64_t seed = 0;
};

/// Escape level for infinite-horizon targets, infinity when absorption is
/// certain (Phi(0) = 0).
double escape_level(const BranchingMechanism& mech, const RefractionSpec& refraction, double x0, double tolerance);

/// One ensemble usable for every target with the same upper level. With
/// `two_sided` paths stop at the first exit from (0, a) and no escape level
/// is used.
Ensemble simulate_ensemble(const BranchingMechanism& mech, const RefractionSpec& refraction, double x0, double a,
                           bool two_sided, const MCConfig& config);

/// Per-path value of the target (indicator or discounted indicator).
double path_value(const FunctionalSpec& spec, const PathOutcome& o);

MCEstimate estimate_from_ensemble(const FunctionalSpec& spec, const Ensemble& ensemble);

MCEstimate estimate_functional(const FunctionalSpec& spec, const BranchingMechanism& mech,
                               const RefractionSpec& refraction, double x0, const MCConfig& config);

enum class Verdict { Pass, Warn, Fail };

std::string to_string(Verdict v);

struct AgreementReport {
    double formula = 0.0;
    MCEstimate mc;
    double difference = 0.0;
    /// |difference| in units of SE (infinite when SE = 0 and there is a gap).
    double z_score = 0.0;
    Verdict verdict = Verdict::Fail;
};

/// PASS within 3 SE + bias bound, WARN within 4 SE + bias bound, FAIL beyond.
AgreementReport agreement_report(double formula_value, const MCEstimate& mc);

} // namespace rcsbp
