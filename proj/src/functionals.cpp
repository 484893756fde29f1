#include "rcsbp/functionals.hpp"

#include "rcsbp/errors.hpp"
#include "rcsbp/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace rcsbp {

void validate_model(const BranchingMechanism& mech, const RefractionSpec& refraction) {
    mech.validate();
    if (!(refraction.delta >= 0.0) || !std::isfinite(refraction.delta)) throw ConfigError("delta must be >= 0");
    if (!(refraction.b >= 0.0)) throw ConfigError("b must be >= 0");
    if (refraction.delta > 0.0 && !check_H_bar(mech, refraction)) {
        throw ConfigError("refraction drift delta violates the bounded-variation condition delta < c");
    }
}

namespace {

ScaleGrid make_grid(const LaplaceExponent& e, double q, double extent, const FunctionalOptions& opts) {
    GridSpec spec;
    spec.x_max = extent;
    spec.n = opts.n;
    return build_scale_grid(e, q, spec, opts.inversion, opts.force_method);
}

double extent_for(double v) { return std::max(v, 1e-6); }

SimpsonRefinement refinement_for(const ScaleGrid& g) {
    SimpsonRefinement r;
    r.rel_tol = 1e-12;
    r.min_panel_width = g.spacing() / 64.0;
    return r;
}

struct ExitParts {
    double w_num;   // W(a-x) + delta conv'
    double w_den;   // W(a) + delta conv'
    double z_num;   // Z(a-x) + delta q conv
    double z_den;   // Z(a) + delta q conv
    std::string method;
};

ExitParts exit_parts(const ExitQuery& query, const BranchingMechanism& mech, const RefractionSpec& refraction,
                     const FunctionalOptions& opts, bool need_z) {
    validate_model(mech, refraction);
    if (!(query.a > 0.0)) throw DomainError("exit query needs a > 0");
    if (!(query.x >= 0.0 && query.x <= query.a)) throw DomainError("exit query needs 0 <= x <= a");
    if (!(query.q >= 0.0)) throw DomainError("exit query needs q >= 0");

    const double a = query.a;
    const double x = query.x;
    const double b = refraction.b;
    const double delta = refraction.delta;
    const ScaleGrid plain = make_grid(plain_exponent(mech), query.q, a, opts);
    ExitParts p{plain.W(a - x), plain.W(a), plain.Z(a - x), plain.Z(a), to_string(plain.method())};
    if (delta > 0.0) {
        const ScaleGrid refr = make_grid(refracted_exponent(mech, delta), query.q, a, opts);
        p.method = "plain=" + p.method + ";refracted=" + to_string(refr.method());
        using K = ConvolutionKernel;
        p.w_num += delta * refraction_convolution(plain, refr, a, x, b, K::DerivativeKernel);
        p.w_den += delta * refraction_convolution(plain, refr, a, 0.0, b, K::DerivativeKernel);
        const double qe = plain.effective_q();
        if (need_z && qe != 0.0) {
            p.z_num += delta * qe * refraction_convolution(plain, refr, a, x, b, K::PlainKernel);
            p.z_den += delta * qe * refraction_convolution(plain, refr, a, 0.0, b, K::PlainKernel);
        }
    }
    return p;
}

std::vector<std::string> exit_warnings(const ExitQuery& query, const RefractionSpec& refraction) {
    std::vector<std::string> w;
    if (query.x >= refraction.b) w.emplace_back(kOutsideHypothesis);
    return w;
}

// [e^{-r x} + delta r int_x^b WW(u-x) e^{-r u} du] / [1 + delta r int_0^b WW(u) e^{-r u} du]
// with WW the scale function of `refracted` at q.
FunctionalResult root_transform(double x, double root, const LaplaceExponent& refracted, double q, double delta,
                                double b, const FunctionalOptions& opts, const std::string& root_name) {
    FunctionalResult res;
    if (delta == 0.0 || root == 0.0 || b == 0.0) {
        res.value = std::exp(-root * x);
        res.method = "closed_form_exponential(" + root_name + ")";
        return res;
    }
    const ScaleGrid ww = make_grid(refracted, q, extent_for(b), opts);
    const SimpsonRefinement ref = refinement_for(ww);
    double num = std::exp(-root * x);
    if (x < b) {
        num += delta * root *
               simpson_piecewise([&](double v) { return ww.W(v) * std::exp(-root * (v + x)); }, 0.0, b - x,
                                 kink_points(ww, b), ref);
    }
    const double den = 1.0 + delta * root *
                                 simpson_piecewise([&](double u) { return ww.W(u) * std::exp(-root * u); }, 0.0, b,
                                                   kink_points(ww, b), ref);
    res.value = num / den;
    res.method = "scale_function(" + to_string(ww.method()) + ")+simpson";
    return res;
}

} // namespace

FunctionalResult exit_down_transform(const ExitQuery& query, const BranchingMechanism& mech,
                                     const RefractionSpec& refraction, const FunctionalOptions& opts) {
    const ExitParts p = exit_parts(query, mech, refraction, opts, false);
    return {p.w_num / p.w_den, p.method, exit_warnings(query, refraction)};
}

FunctionalResult exit_up_transform(const ExitQuery& query, const BranchingMechanism& mech,
                                   const RefractionSpec& refraction, const FunctionalOptions& opts) {
    const ExitParts p = exit_parts(query, mech, refraction, opts, true);
    return {p.z_num - p.z_den / p.w_den * p.w_num, p.method, exit_warnings(query, refraction)};
}

FunctionalResult extinction_transform(double x, double q, const BranchingMechanism& mech,
                                      const RefractionSpec& refraction, const FunctionalOptions& opts) {
    validate_model(mech, refraction);
    if (!(x >= 0.0)) throw DomainError("extinction_transform needs x >= 0");
    if (!(q >= 0.0)) throw DomainError("extinction_transform needs q >= 0");
    const double root = right_inverse(plain_exponent(mech), q);
    return root_transform(x, root, refracted_exponent(mech, refraction.delta), q, refraction.delta, refraction.b,
                          opts, "Phi(q)");
}

FunctionalResult vanish_probability(double x, const BranchingMechanism& mech, const RefractionSpec& refraction,
                                    const FunctionalOptions& opts) {
    return extinction_transform(x, 0.0, mech, refraction, opts);
}

FunctionalResult sup_below_probability(double x, double a, const BranchingMechanism& mech,
                                       const RefractionSpec& refraction, const FunctionalOptions& opts) {
    const ExitParts p = exit_parts({x, a, 0.0}, mech, refraction, opts, false);
    return {p.w_num / p.w_den, p.method, {}};
}

double diffusion_extinction(double x, double gamma, double sigma2, double delta, double b) {
    if (!(sigma2 > 0.0)) throw DomainError("diffusion_extinction needs sigma2 > 0");
    if (!(gamma > 0.0) || !(gamma + delta > 0.0)) {
        throw DomainError("diffusion_extinction needs gamma > 0 and gamma + delta > 0");
    }
    if (!(x >= 0.0) || !(b >= 0.0)) throw DomainError("diffusion_extinction needs x, b >= 0");
    const double gd = gamma + delta;
    const double lo = std::min(x, b);
    // F(y) = s/(2 g) (1 - e^{-2 g y / s})
    auto F = [sigma2](double g, double y) { return -sigma2 / (2.0 * g) * std::expm1(-2.0 * g * y / sigma2); };
    const double eb = std::exp(-2.0 * gd * b / sigma2);
    const double k_inv = F(gd, b) + sigma2 / (2.0 * gamma) * eb;
    double bracket = F(gd, lo);
    if (x > b) {
        // s/(2 gamma) e^{-2 delta b/s} (e^{-2 gamma b/s} - e^{-2 gamma x/s})
        bracket += eb * F(gamma, x - b);
    }
    return 1.0 - bracket / k_inv;
}

std::string to_string(OguraGrey verdict) {
    switch (verdict) {
    case OguraGrey::Explosive: return "Explosive";
    case OguraGrey::NonExplosive: return "NonExplosive";
    case OguraGrey::Inconclusive: return "Inconclusive";
    }
    return "unknown";
}

OguraGrey ogura_grey(const LaplaceExponent& exponent) {
    double lambda0 = 1.0;
    if (exponent(0.0) < 0.0 || exponent.derivative(0.0) < 0.0) {
        const double root = right_inverse(exponent, 0.0);
        if (root > 0.0) lambda0 = root / 2.0;
    }
    // Increments I_k = int_{lambda0 2^-(k+1)}^{lambda0 2^-k} d lambda / |psi|, in log coordinates.
    constexpr int kLevels = 40;
    std::vector<double> inc;
    for (int k = 0; k < kLevels; ++k) {
        const double hi = std::log(lambda0) - k * std::log(2.0);
        const double lo = hi - std::log(2.0);
        const double v = simpson(
            [&](double s) {
                const double l = std::exp(s);
                const double p = std::abs(exponent(l));
                return p > 0.0 ? l / p : kInf;
            },
            lo, hi, 64);
        if (!std::isfinite(v)) return OguraGrey::NonExplosive;
        inc.push_back(v);
    }
    const double last = inc.back();
    if (last < 1e-10) return OguraGrey::Explosive;
    bool non_shrinking = true;
    for (int k = kLevels - 10; k < kLevels; ++k) {
        if (inc[k] < inc[k - 1] * (1.0 - 1e-3)) non_shrinking = false;
    }
    return non_shrinking ? OguraGrey::NonExplosive : OguraGrey::Inconclusive;
}

ExplosionReport classify_explosion(const BranchingMechanism& mech, const RefractionSpec& refraction) {
    validate_model(mech, refraction);
    ExplosionReport r;
    r.jumps_to_infinity = mech.beta > 0.0;
    r.ogura_grey_plain = ogura_grey(plain_exponent(mech));
    r.ogura_grey_delta = ogura_grey(refracted_exponent(mech, refraction.delta));
    return r;
}

double lil_alpha(double t, const BranchingMechanism& mech) {
    if (!(t > 0.0) || !(t < std::exp(-1.0))) throw DomainError("lil_alpha needs t in (0, 1/e)");
    mech.validate();
    const double l = std::log(-std::log(t));
    return l / right_inverse(plain_exponent(mech), l / t);
}

FunctionalResult max_jump_cdf(double x, double y, const BranchingMechanism& mech,
                              const RefractionSpec& refraction, const FunctionalOptions& opts) {
    validate_model(mech, refraction);
    if (!(y > 0.0)) throw DomainError("max_jump_cdf needs y > 0");
    if (mech.jumps.empty()) {
        FunctionalResult r = vanish_probability(x, mech, refraction, opts);
        r.warnings.emplace_back(kNoJumps);
        return r;
    }
    if (!(x >= 0.0)) throw DomainError("max_jump_cdf needs x >= 0");
    const double tail = mech.jumps.tail_mass(y);
    const double root = right_inverse(truncated_exponent(mech, y), tail);
    return root_transform(x, root, truncated_refracted_exponent(mech, y, refraction.delta), tail, refraction.delta,
                          refraction.b, opts, "theta_y");
}

} // namespace rcsbp
