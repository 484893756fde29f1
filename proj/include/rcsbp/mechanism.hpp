#pragma once

#include <complex>
#include <limits>
#include <string>

namespace rcsbp {

// Orientation used throughout the library.
//
// The driving process Xbar is spectrally positive (upward jumps only) and
//     Xbar_t = x + D t + sigma B_t + (compound Poisson jumps),
// with physical drift D = gamma - int_(0,1) z Pi(dz). The branching mechanism
// is the Laplace exponent in the decreasing direction,
//     psi(theta) = log E[exp(-theta (Xbar_1 - x))]
//                = -beta - gamma theta + sigma2 theta^2 / 2
//                  + int (exp(-theta z) - 1 + theta z 1{z<1}) Pi(dz),
// so that in the Brownian case the population drifts at rate +gamma and the
// extinction ODE reads (gamma + delta 1{x<=b}) x p' + (sigma2/2) x p'' = 0.
// psi is convex with psi(0) = -beta and psi(+inf) = +inf.

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class JumpKind { None, Exponential, Fixed };

/// Finite-activity Levy measure on (0, inf).
struct JumpMeasure {
    JumpKind kind = JumpKind::None;
    double rate = 0.0;  ///< total mass lambda_J
    double mu = 0.0;    ///< exponential: inverse mean
    double size = 0.0;  ///< fixed: jump size m

    static JumpMeasure none() { return {}; }
    static JumpMeasure exponential(double rate, double mean);
    static JumpMeasure fixed(double rate, double size);

    bool empty() const { return kind == JumpKind::None; }
    double mean_size() const;
    /// Pi((y, inf)).
    double tail_mass(double y) const;
    /// int_(0,1) z Pi(dz).
    double small_jump_mean() const;
    /// int_(0,y] (exp(-theta z) - 1) Pi(dz), y may be +inf.
    double laplace_part(double theta, double y = kInf) const;
    std::complex<long double> laplace_part(std::complex<long double> theta, double y = kInf) const;
    /// d/dtheta of laplace_part.
    double laplace_part_derivative(double theta, double y = kInf) const;
    double laplace_part_second_derivative(double theta, double y = kInf) const;
};

std::string to_string(JumpKind kind);

struct BranchingMechanism {
    double beta = 0.0;
    double gamma = 0.0;
    double sigma2 = 0.0;
    JumpMeasure jumps;

    /// Physical drift D of Xbar between jumps.
    double drift() const { return gamma - jumps.small_jump_mean(); }
    bool bounded_variation() const { return sigma2 == 0.0; }
    /// Throws ConfigError when the parameters do not describe a valid mechanism.
    void validate() const;
};

struct RefractionSpec {
    double delta = 0.0;
    double b = 0.0;
};

enum class ExponentKind { Plain, Refracted, Truncated, TruncatedRefracted };

std::string to_string(ExponentKind kind);

/// A concrete Laplace exponent theta -> log E[exp(-theta Y_1)] of a
/// spectrally positive process Y_t = D t + sigma B_t + jumps <= truncation,
/// killed at rate `killing`. Refraction and truncation are folded in; `kind`,
/// `delta` and `truncation` record provenance.
struct LaplaceExponent {
    double killing = 0.0;
    double drift = 0.0;
    double sigma2 = 0.0;
    JumpMeasure jumps;
    double truncation = kInf;

    ExponentKind kind = ExponentKind::Plain;
    double delta = 0.0;

    double operator()(double theta) const;
    std::complex<long double> operator()(std::complex<long double> theta) const;
    double derivative(double theta) const;
    double second_derivative(double theta) const;

    /// Same exponent with the killing term removed.
    LaplaceExponent unkilled() const;
    bool has_jumps() const;
    bool bounded_variation() const { return sigma2 == 0.0; }
    /// For bounded variation, the downward drift c = -D of the spectrally
    /// negative dual; W(0) = 1/c.
    double bv_drift() const { return -drift; }
    /// psi(+inf) = +inf and the driving process is not monotone increasing.
    bool admissible() const { return sigma2 > 0.0 || drift < 0.0; }
};

LaplaceExponent plain_exponent(const BranchingMechanism& mech);
LaplaceExponent refracted_exponent(const BranchingMechanism& mech, double delta);
/// Jumps larger than y removed. If Pi((y,inf)) = 0 the plain exponent is
/// returned unchanged.
LaplaceExponent truncated_exponent(const BranchingMechanism& mech, double y);
LaplaceExponent truncated_refracted_exponent(const BranchingMechanism& mech, double y, double delta);

/// sup{lambda >= 0 : psi(lambda) = q}. Throws NonConvergence.
double right_inverse(const LaplaceExponent& psi, double q);

double psi(const BranchingMechanism& mech, double theta);
double psi_refracted(const BranchingMechanism& mech, const RefractionSpec& refraction, double theta);
/// Right inverse of psi, or of psi(lambda) - delta lambda when `refraction`
/// is given.
double psi_right_inverse(const BranchingMechanism& mech, double q);
double psi_right_inverse(const BranchingMechanism& mech, double q, const RefractionSpec& refraction);
/// (H-bar): unbounded variation, or delta strictly below the natural drift c.
bool check_H_bar(const BranchingMechanism& mech, const RefractionSpec& refraction);
double truncated_psi(const BranchingMechanism& mech, double y, double theta);
/// Exponent of the maximal-jump law: right inverse of the y-truncated
/// exponent evaluated at Pi((y, inf)).
double theta_y(const BranchingMechanism& mech, double y);

} // namespace rcsbp
