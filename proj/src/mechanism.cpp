#include "rcsbp/mechanism.hpp"

#include "rcsbp/errors.hpp"
#include "rcsbp/roots.hpp"

#include <cmath>

namespace rcsbp {

using cld = std::complex<long double>;

JumpMeasure JumpMeasure::exponential(double rate, double mean) {
    if (!(rate > 0.0) || !(mean > 0.0)) throw ConfigError("exponential jumps need rate > 0 and mean > 0");
    JumpMeasure j;
    j.kind = JumpKind::Exponential;
    j.rate = rate;
    j.mu = 1.0 / mean;
    return j;
}

JumpMeasure JumpMeasure::fixed(double rate, double size) {
    if (!(rate > 0.0) || !(size > 0.0)) throw ConfigError("fixed jumps need rate > 0 and size > 0");
    JumpMeasure j;
    j.kind = JumpKind::Fixed;
    j.rate = rate;
    j.size = size;
    return j;
}

double JumpMeasure::mean_size() const {
    switch (kind) {
    case JumpKind::Exponential: return 1.0 / mu;
    case JumpKind::Fixed: return size;
    case JumpKind::None: break;
    }
    return 0.0;
}

double JumpMeasure::tail_mass(double y) const {
    switch (kind) {
    case JumpKind::Exponential: return rate * std::exp(-mu * std::max(y, 0.0));
    case JumpKind::Fixed: return size > y ? rate : 0.0;
    case JumpKind::None: break;
    }
    return 0.0;
}

double JumpMeasure::small_jump_mean() const {
    switch (kind) {
    case JumpKind::Exponential:
        // lambda int_0^1 z mu e^{-mu z} dz
        return rate * (1.0 - std::exp(-mu) * (1.0 + mu)) / mu;
    case JumpKind::Fixed: return size < 1.0 ? rate * size : 0.0;
    case JumpKind::None: break;
    }
    return 0.0;
}

double JumpMeasure::laplace_part(double theta, double y) const {
    switch (kind) {
    case JumpKind::Exponential: {
        const double s = mu + theta;
        if (std::isinf(y)) return s > 0.0 ? -rate * theta / s : kInf;
        if (std::abs(s) < 1e-12 * mu) {
            // removable singularity at theta = -mu
            return rate * (mu * y + std::expm1(-mu * y));
        }
        // lambda [ -theta (1 - e^{-mu y}) + mu e^{-mu y} (1 - e^{-theta y}) ] / (mu + theta)
        const double num = theta * std::expm1(-mu * y) - mu * std::exp(-mu * y) * std::expm1(-theta * y);
        return rate * num / s;
    }
    case JumpKind::Fixed:
        return size <= y ? rate * std::expm1(-theta * size) : 0.0;
    case JumpKind::None: break;
    }
    return 0.0;
}

cld JumpMeasure::laplace_part(cld theta, double y) const {
    switch (kind) {
    case JumpKind::Exponential: {
        const cld m(mu, 0.0L);
        const cld s = m + theta;
        if (std::isinf(y)) return -static_cast<long double>(rate) * theta / s;
        const long double ly = y;
        const cld e_mu(std::exp(-static_cast<long double>(mu) * ly), 0.0L);
        const cld num = -theta * (1.0L - e_mu) + m * e_mu * (1.0L - std::exp(-theta * ly));
        return static_cast<long double>(rate) * num / s;
    }
    case JumpKind::Fixed:
        if (size > y) return {0.0L, 0.0L};
        return static_cast<long double>(rate) * (std::exp(-theta * static_cast<long double>(size)) - 1.0L);
    case JumpKind::None: break;
    }
    return {0.0L, 0.0L};
}

double JumpMeasure::laplace_part_derivative(double theta, double y) const {
    switch (kind) {
    case JumpKind::Exponential: {
        // -lambda int_0^y z mu e^{-(mu+theta) z} dz
        const double s = mu + theta;
        if (std::isinf(y)) return s > 0.0 ? -rate * mu / (s * s) : -kInf;
        const double sy = s * y;
        if (std::abs(sy) < 1e-6) return -rate * mu * y * y * (0.5 - sy / 3.0);
        return -rate * mu * (1.0 - std::exp(-sy) * (1.0 + sy)) / (s * s);
    }
    case JumpKind::Fixed:
        return size <= y ? -rate * size * std::exp(-theta * size) : 0.0;
    case JumpKind::None: break;
    }
    return 0.0;
}

double JumpMeasure::laplace_part_second_derivative(double theta, double y) const {
    switch (kind) {
    case JumpKind::Exponential: {
        // lambda int_0^y z^2 mu e^{-s z} dz
        const double s = mu + theta;
        if (std::isinf(y)) return s > 0.0 ? 2.0 * rate * mu / (s * s * s) : kInf;
        const double sy = s * y;
        if (std::abs(sy) < 1e-4) return rate * mu * y * y * y * (1.0 / 3.0 - sy / 4.0);
        return rate * mu * (2.0 - std::exp(-sy) * (2.0 + 2.0 * sy + sy * sy)) / (s * s * s);
    }
    case JumpKind::Fixed:
        return size <= y ? rate * size * size * std::exp(-theta * size) : 0.0;
    case JumpKind::None: break;
    }
    return 0.0;
}

std::string to_string(JumpKind kind) {
    switch (kind) {
    case JumpKind::None: return "none";
    case JumpKind::Exponential: return "exp";
    case JumpKind::Fixed: return "fixed";
    }
    return "unknown";
}

std::string to_string(ExponentKind kind) {
    switch (kind) {
    case ExponentKind::Plain: return "plain";
    case ExponentKind::Refracted: return "refracted";
    case ExponentKind::Truncated: return "truncated";
    case ExponentKind::TruncatedRefracted: return "truncated_refracted";
    }
    return "unknown";
}

void BranchingMechanism::validate() const {
    if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
    if (!(sigma2 >= 0.0)) throw ConfigError("sigma2 must be >= 0");
    if (!std::isfinite(gamma)) throw ConfigError("gamma must be finite");
    if (!plain_exponent(*this).admissible()) {
        throw ConfigError("mechanism drives a monotone increasing process (sigma2 = 0 and drift >= 0)");
    }
}

double LaplaceExponent::operator()(double theta) const {
    return -killing - drift * theta + 0.5 * sigma2 * theta * theta + jumps.laplace_part(theta, truncation);
}

cld LaplaceExponent::operator()(cld theta) const {
    return -static_cast<long double>(killing) - static_cast<long double>(drift) * theta +
           0.5L * static_cast<long double>(sigma2) * theta * theta + jumps.laplace_part(theta, truncation);
}

double LaplaceExponent::derivative(double theta) const {
    return -drift + sigma2 * theta + jumps.laplace_part_derivative(theta, truncation);
}

double LaplaceExponent::second_derivative(double theta) const {
    return sigma2 + jumps.laplace_part_second_derivative(theta, truncation);
}

LaplaceExponent LaplaceExponent::unkilled() const {
    LaplaceExponent e = *this;
    e.killing = 0.0;
    return e;
}

bool LaplaceExponent::has_jumps() const {
    return !jumps.empty() && jumps.tail_mass(0.0) - jumps.tail_mass(truncation) > 0.0;
}

LaplaceExponent plain_exponent(const BranchingMechanism& mech) {
    LaplaceExponent e;
    e.killing = mech.beta;
    e.drift = mech.drift();
    e.sigma2 = mech.sigma2;
    e.jumps = mech.jumps;
    return e;
}

LaplaceExponent refracted_exponent(const BranchingMechanism& mech, double delta) {
    LaplaceExponent e = plain_exponent(mech);
    e.drift += delta;
    e.delta = delta;
    e.kind = ExponentKind::Refracted;
    return e;
}

LaplaceExponent truncated_exponent(const BranchingMechanism& mech, double y) {
    if (!(y > 0.0)) throw DomainError("truncation level y must be > 0");
    LaplaceExponent e = plain_exponent(mech);
    if (mech.jumps.tail_mass(y) == 0.0) return e;
    e.truncation = y;
    e.kind = ExponentKind::Truncated;
    return e;
}

LaplaceExponent truncated_refracted_exponent(const BranchingMechanism& mech, double y, double delta) {
    LaplaceExponent e = truncated_exponent(mech, y);
    e.drift += delta;
    e.delta = delta;
    e.kind = e.kind == ExponentKind::Plain ? ExponentKind::Refracted : ExponentKind::TruncatedRefracted;
    return e;
}

double right_inverse(const LaplaceExponent& exponent, double q) {
    if (!(q >= 0.0)) throw DomainError("right inverse needs q >= 0");
    if (!exponent.admissible()) throw DomainError("exponent does not tend to +inf");
    return convex_right_root([&](double t) { return exponent(t); },
                             [&](double t) { return exponent.derivative(t); }, q);
}

double psi(const BranchingMechanism& mech, double theta) { return plain_exponent(mech)(theta); }

double psi_refracted(const BranchingMechanism& mech, const RefractionSpec& refraction, double theta) {
    return psi(mech, theta) - refraction.delta * theta;
}

double psi_right_inverse(const BranchingMechanism& mech, double q) {
    return right_inverse(plain_exponent(mech), q);
}

double psi_right_inverse(const BranchingMechanism& mech, double q, const RefractionSpec& refraction) {
    return right_inverse(refracted_exponent(mech, refraction.delta), q);
}

bool check_H_bar(const BranchingMechanism& mech, const RefractionSpec& refraction) {
    if (mech.sigma2 > 0.0) return true;
    const double c = -mech.drift();
    return refraction.delta < c;
}

double truncated_psi(const BranchingMechanism& mech, double y, double theta) {
    return truncated_exponent(mech, y)(theta);
}

double theta_y(const BranchingMechanism& mech, double y) {
    return right_inverse(truncated_exponent(mech, y), mech.jumps.tail_mass(y));
}

} // namespace rcsbp
