#include "rcsbp/estimate.hpp"

#include "rcsbp/errors.hpp"
#include "rcsbp/functionals.hpp"

#include <algorithm>
#include <cmath>

namespace rcsbp {

std::string to_string(FunctionalKind kind) {
    switch (kind) {
    case FunctionalKind::ExitDown: return "exit_down";
    case FunctionalKind::ExitUp: return "exit_up";
    case FunctionalKind::Vanish: return "vanish";
    case FunctionalKind::SupBelow: return "sup_below";
    case FunctionalKind::MaxJumpCDF: return "max_jump_cdf";
    case FunctionalKind::ExtinctionTransform: return "extinction_transform";
    }
    return "unknown";
}

bool FunctionalSpec::two_sided() const {
    return kind == FunctionalKind::ExitDown || kind == FunctionalKind::ExitUp || kind == FunctionalKind::SupBelow;
}

double escape_level(const BranchingMechanism& mech, const RefractionSpec& refraction, double x0, double tolerance) {
    const double phi0 = right_inverse(plain_exponent(mech), 0.0);
    if (!(phi0 > 0.0)) return kInf;
    return std::max(refraction.b, x0) + std::log(1.0 / tolerance) / phi0;
}

Ensemble simulate_ensemble(const BranchingMechanism& mech, const RefractionSpec& refraction, double x0, double a,
                           bool two_sided, const MCConfig& config) {
    validate_model(mech, refraction);
    if (config.n_paths == 0) throw DomainError("ensemble needs at least one path");
    if (!(config.escape_tolerance > 0.0 && config.escape_tolerance < 1.0)) {
        throw DomainError("escape_tolerance must lie in (0, 1)");
    }
    Ensemble ens;
    ens.upper_level = a;
    ens.stopped_at_upper = two_sided;
    ens.phi0 = right_inverse(plain_exponent(mech), 0.0);
    ens.b = refraction.b;
    ens.seed = config.seed;
    if (!two_sided) ens.escape_level = escape_level(mech, refraction, x0, config.escape_tolerance);

    SimulationOptions opts;
    opts.dt = config.dt;
    opts.horizon = config.horizon;
    opts.eps0 = config.eps0;
    opts.upper_level = a;
    opts.stop_at_upper = two_sided;
    opts.escape_level = std::max(ens.escape_level, a < kInf && !two_sided ? a : 0.0);
    opts.bridge = config.bridge;
    ens.escape_level = opts.escape_level;

    ens.outcomes.resize(config.n_paths);
    parallel_for(config.n_paths, [&](std::size_t i) {
        auto rng = path_rng(config.seed, i);
        ens.outcomes[i] = simulate_outcome(mech, refraction, x0, opts, rng);
    });
    return ens;
}

double path_value(const FunctionalSpec& spec, const PathOutcome& o) {
    switch (spec.kind) {
    case FunctionalKind::ExitDown:
    case FunctionalKind::SupBelow:
        if (o.absorbed && o.absorbed_at < o.crossed_at) return std::exp(-spec.q * o.absorbed_at);
        return 0.0;
    case FunctionalKind::ExitUp:
        if (o.crossed && o.crossed_at < o.absorbed_at && o.crossed_at < o.killed_at) {
            return std::exp(-spec.q * o.crossed_at);
        }
        return 0.0;
    case FunctionalKind::Vanish: return o.absorbed ? 1.0 : 0.0;
    case FunctionalKind::MaxJumpCDF: return o.absorbed && o.max_jump <= spec.y ? 1.0 : 0.0;
    case FunctionalKind::ExtinctionTransform: return o.absorbed ? std::exp(-spec.q * o.absorbed_at) : 0.0;
    }
    return 0.0;
}

MCEstimate estimate_from_ensemble(const FunctionalSpec& spec, const Ensemble& ens) {
    if (spec.two_sided() && (!ens.stopped_at_upper || ens.upper_level != spec.a)) {
        throw DomainError("estimate_from_ensemble: ensemble was not stopped at the target's upper level");
    }
    if (ens.outcomes.empty()) throw DomainError("estimate_from_ensemble: empty ensemble");
    const std::size_t n = ens.outcomes.size();
    double sum = 0.0;
    std::size_t escaped = 0;
    std::size_t unresolved = 0;
    for (const auto& o : ens.outcomes) {
        sum += path_value(spec, o);
        escaped += o.escaped ? 1 : 0;
        unresolved += o.unresolved ? 1 : 0;
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& o : ens.outcomes) {
        const double d = path_value(spec, o) - mean;
        ss += d * d;
    }
    MCEstimate est;
    est.value = mean;
    est.std_error = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    est.ci_lo = mean - 1.96 * est.std_error;
    est.ci_hi = mean + 1.96 * est.std_error;
    est.n_paths = n;
    est.seed = ens.seed;
    const double nd = static_cast<double>(n);
    double bias = static_cast<double>(unresolved) / nd;
    if (escaped > 0) {
        bias += std::exp(-ens.phi0 * (ens.escape_level - ens.b)) * static_cast<double>(escaped) / nd;
    }
    est.horizon_bias_bound = bias;
    return est;
}

MCEstimate estimate_functional(const FunctionalSpec& spec, const BranchingMechanism& mech,
                               const RefractionSpec& refraction, double x0, const MCConfig& config) {
    const bool two_sided = spec.two_sided();
    const Ensemble ens = simulate_ensemble(mech, refraction, x0, two_sided ? spec.a : kInf, two_sided, config);
    return estimate_from_ensemble(spec, ens);
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Warn: return "WARN";
    case Verdict::Fail: return "FAIL";
    }
    return "FAIL";
}

AgreementReport agreement_report(double formula_value, const MCEstimate& mc) {
    AgreementReport r;
    r.formula = formula_value;
    r.mc = mc;
    r.difference = formula_value - mc.value;
    const double gap = std::abs(r.difference);
    r.z_score = mc.std_error > 0.0 ? gap / mc.std_error : (gap > 0.0 ? kInf : 0.0);
    const double slack = mc.horizon_bias_bound + (mc.std_error > 0.0 ? 0.0 : 1e-12);
    if (gap <= 3.0 * mc.std_error + slack) {
        r.verdict = Verdict::Pass;
    } else if (gap <= 4.0 * mc.std_error + slack) {
        r.verdict = Verdict::Warn;
    } else {
        r.verdict = Verdict::Fail;
    }
    return r;
}

} // namespace rcsbp
