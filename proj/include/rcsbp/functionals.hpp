#pragma once

#include "rcsbp/mechanism.hpp"
#include "rcsbp/scale.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rcsbp {

/// Numerical settings shared by the scale-function based functionals. Grids
/// are laid out on [0, extent] with `n` intervals, the extent being the
/// largest argument a formula needs (a for exit problems, b otherwise).
struct FunctionalOptions {
    int n = 4096;
    InversionOptions inversion;
    std::optional<ScaleMethod> force_method;
};

struct FunctionalResult {
    double value = 0.0;
    std::string method;
    std::vector<std::string> warnings;
};

/// Two-sided exit query for V started at x in [0, a]. The refraction
/// threshold b is taken from the RefractionSpec.
struct ExitQuery {
    double x = 0.0;
    double a = 1.0;
    double q = 0.0;
};

/// Warning attached to exit results with x >= b.
inline constexpr const char* kOutsideHypothesis = "outside_stated_hypothesis";
/// Warning attached to max_jump_cdf when the mechanism has no jumps.
inline constexpr const char* kNoJumps = "NoJumps";

/// E_x[exp(-q J_{T0}) ; T0 < Ta], J the total progeny.
FunctionalResult exit_down_transform(const ExitQuery& query, const BranchingMechanism& mech,
                                     const RefractionSpec& refraction, const FunctionalOptions& opts = {});
/// E_x[exp(-q J_{Ta}) ; Ta < T0]. Killed paths count in neither event.
FunctionalResult exit_up_transform(const ExitQuery& query, const BranchingMechanism& mech,
                                   const RefractionSpec& refraction, const FunctionalOptions& opts = {});

/// E_x[exp(-q J_inf) ; V absorbed at 0].
FunctionalResult extinction_transform(double x, double q, const BranchingMechanism& mech,
                                      const RefractionSpec& refraction, const FunctionalOptions& opts = {});
/// P_x(lim V_t = 0).
FunctionalResult vanish_probability(double x, const BranchingMechanism& mech, const RefractionSpec& refraction,
                                    const FunctionalOptions& opts = {});
/// P_x(sup_t V_t < a). Here b > a is allowed.
FunctionalResult sup_below_probability(double x, double a, const BranchingMechanism& mech,
                                       const RefractionSpec& refraction, const FunctionalOptions& opts = {});

/// Extinction probability of the refracted Feller diffusion with generator
/// x[(gamma + delta 1{x<=b}) d/dx + (sigma2/2) d^2/dx^2]. Requires gamma > 0
/// and gamma + delta > 0.
double diffusion_extinction(double x, double gamma, double sigma2, double delta, double b);

enum class OguraGrey { Explosive, NonExplosive, Inconclusive };

std::string to_string(OguraGrey verdict);

struct ExplosionReport {
    bool jumps_to_infinity = false;
    OguraGrey ogura_grey_plain = OguraGrey::Inconclusive;
    OguraGrey ogura_grey_delta = OguraGrey::Inconclusive;
};

/// Numeric test of int_{0+} d lambda / psi(lambda) on the geometric grid
/// lambda_0 2^-k, k <= 40.
OguraGrey ogura_grey(const LaplaceExponent& exponent);
ExplosionReport classify_explosion(const BranchingMechanism& mech, const RefractionSpec& refraction);

/// alpha(t) = log|log t| / Phi(log|log t| / t) for t in (0, 1/e).
double lil_alpha(double t, const BranchingMechanism& mech);

/// P_x(largest jump of V before absorption <= y).
FunctionalResult max_jump_cdf(double x, double y, const BranchingMechanism& mech,
                              const RefractionSpec& refraction, const FunctionalOptions& opts = {});

/// Throws ConfigError unless (mech, refraction) describe a valid refracted model.
void validate_model(const BranchingMechanism& mech, const RefractionSpec& refraction);

} // namespace rcsbp
