#pragma once

#include "rcsbp/mechanism.hpp"

#include <array>
#include <functional>
#include <optional>
#include <utility>
#include <string>
#include <vector>

namespace rcsbp {

enum class ScaleMethod { ClosedFormQuadratic, ClosedFormCramerLundberg, LaplaceInversion };

std::string to_string(ScaleMethod method);

struct GridSpec {
    double x_max = 5.0;
    int n = 4096;
};

struct InversionOptions {
    int terms = 15;
    double precision = 10.0;
};

/// Tabulated q-scale function on the uniform grid x_i = i x_max / n.
///
/// For a killed exponent (psi(0) = -beta) the grid holds the scale function
/// of the unkilled exponent at q + beta, and Z = 1 + (q + beta) int W. This
/// is the form in which the exit identities remain valid with killing.
class ScaleGrid {
public:
    struct Metadata {
        double q = 0.0;
        double killing = 0.0;
        ExponentKind exponent = ExponentKind::Plain;
        double delta = 0.0;
        double truncation = kInf;
        ScaleMethod method = ScaleMethod::ClosedFormQuadratic;
        double right_root = 0.0;  ///< Phi(q) of the exponent
        double kink = 0.0;        ///< W' jumps at multiples of this; 0 when smooth
    };

    /// Exact {W, W', Z} at a point, replacing interpolation when set. A NaN
    /// Z falls back to the table.
    using Evaluator = std::function<std::array<double, 3>(double)>;

    ScaleGrid(Metadata meta, double x_max, std::vector<double> w, std::vector<double> w_prime,
              std::vector<double> z);

    const Metadata& meta() const { return meta_; }
    double q() const { return meta_.q; }
    double effective_q() const { return meta_.q + meta_.killing; }
    ScaleMethod method() const { return meta_.method; }
    double x_max() const { return x_max_; }
    int n() const { return static_cast<int>(w_.size()) - 1; }
    double spacing() const { return h_; }
    double x(int i) const { return i * h_; }

    const std::vector<double>& w() const { return w_; }
    const std::vector<double>& w_prime() const { return w_prime_; }
    const std::vector<double>& z() const { return z_; }

    /// Interpolated values; W(x) = 0 and Z(x) = 1 for x < 0. Throws
    /// DomainError beyond x_max.
    double W(double x) const;
    double Wprime(double x) const;
    double Z(double x) const;

    void set_evaluator(Evaluator f) { exact_ = std::move(f); }
    bool has_evaluator() const { return static_cast<bool>(exact_); }

private:
    void locate(double x, int& i, double& t) const;

    Metadata meta_;
    double x_max_;
    double h_;
    std::vector<double> w_;
    std::vector<double> w_prime_;
    std::vector<double> z_;
    Evaluator exact_;
};

/// Scale function of psi(theta) = a2 theta^2 + a1 theta at q.
ScaleGrid scale_closed_quadratic(double a2, double a1, double q, const GridSpec& grid);
/// Closed form for psi - q = N/P rational, i.e. Brownian or pure drift with
/// untruncated exponential jumps (Cramer-Lundberg, possibly perturbed), and
/// the finite series for bounded variation with jumps of one fixed size.
ScaleGrid scale_cramer_lundberg(const LaplaceExponent& exponent, double q, const GridSpec& grid);
ScaleGrid scale_laplace_inversion(const LaplaceExponent& exponent, double q, const GridSpec& grid,
                                  const InversionOptions& opts = {});

/// Picks the closed form when one applies, Laplace inversion otherwise.
ScaleGrid build_scale_grid(const LaplaceExponent& exponent, double q, const GridSpec& grid,
                           const InversionOptions& opts = {},
                           std::optional<ScaleMethod> force = std::nullopt);

/// Multiples of meta().kink below `up_to`.
std::vector<double> kink_points(const ScaleGrid& grid, double up_to);

enum class ConvolutionKernel { DerivativeKernel, PlainKernel };

/// int_{a-b}^{a-x} WW(a-x-y) K(y) dy with K = W' or W. For the derivative
/// kernel the integral is against the measure W(dy), which carries an atom
/// W(0) at y = 0 in bounded variation; it is included when a - b <= 0.
double refraction_convolution(const ScaleGrid& plain, const ScaleGrid& refracted, double a, double x,
                              double b, ConvolutionKernel mode);

/// Relative residual |int_0^inf e^{-theta x} W(x) dx - 1/(psi(theta) - q)|
/// divided by 1/(psi(theta) - q), using Simpson on the grid and a two-term
/// tail extrapolation beyond x_max. Requires theta > Phi(q).
double laplace_transform_residual(const ScaleGrid& grid, const LaplaceExponent& exponent, double theta);

} // namespace rcsbp
