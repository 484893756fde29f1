#include "rcsbp/scale.hpp"

#include "rcsbp/errors.hpp"
#include "rcsbp/laplace_inversion.hpp"
#include "rcsbp/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace rcsbp {

std::string to_string(ScaleMethod method) {
    switch (method) {
    case ScaleMethod::ClosedFormQuadratic: return "closed_form_quadratic";
    case ScaleMethod::ClosedFormCramerLundberg: return "closed_form_cramer_lundberg";
    case ScaleMethod::LaplaceInversion: return "laplace_inversion";
    }
    return "unknown";
}

ScaleGrid::ScaleGrid(Metadata meta, double x_max, std::vector<double> w, std::vector<double> w_prime,
                     std::vector<double> z)
    : meta_(meta), x_max_(x_max), w_(std::move(w)), w_prime_(std::move(w_prime)), z_(std::move(z)) {
    if (!(x_max_ > 0.0)) throw DomainError("ScaleGrid: x_max must be > 0");
    if (w_.size() < 4 || w_prime_.size() != w_.size() || z_.size() != w_.size()) {
        throw DomainError("ScaleGrid: inconsistent table sizes");
    }
    h_ = x_max_ / static_cast<double>(w_.size() - 1);
}

void ScaleGrid::locate(double x, int& i, double& t) const {
    if (x > x_max_ * (1.0 + 1e-12)) {
        throw DomainError("ScaleGrid: x = " + std::to_string(x) + " beyond x_max = " + std::to_string(x_max_));
    }
    const double s = std::min(x, x_max_) / h_;
    i = std::min(static_cast<int>(s), n() - 1);
    t = s - i;
}

double ScaleGrid::W(double x) const {
    if (x < 0.0) return 0.0;
    int i;
    double t;
    locate(x, i, t);
    if (exact_) return exact_(x)[0];
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * w_[i] + (t3 - 2 * t2 + t) * h_ * w_prime_[i] + (-2 * t3 + 3 * t2) * w_[i + 1] +
           (t3 - t2) * h_ * w_prime_[i + 1];
}

double ScaleGrid::Wprime(double x) const {
    if (x < 0.0) return 0.0;
    int i;
    double t;
    locate(x, i, t);
    if (exact_) return exact_(x)[1];
    const int j0 = std::clamp(i - 1, 0, n() - 3);
    const double s = std::min(x, x_max_) / h_ - j0;  // local coordinate, nodes at 0..3
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        double l = 1.0;
        for (int m = 0; m < 4; ++m) {
            if (m != k) l *= (s - m) / static_cast<double>(k - m);
        }
        acc += l * w_prime_[j0 + k];
    }
    return acc;
}

double ScaleGrid::Z(double x) const {
    if (x < 0.0) return 1.0;
    int i;
    double t;
    locate(x, i, t);
    if (exact_) {
        const double z = exact_(x)[2];
        if (!std::isnan(z)) return z;
    }
    const double qe = effective_q();
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * z_[i] + (t3 - 2 * t2 + t) * h_ * qe * w_[i] + (-2 * t3 + 3 * t2) * z_[i + 1] +
           (t3 - t2) * h_ * qe * w_[i + 1];
}

namespace {

void check_grid(const GridSpec& grid) {
    if (!(grid.x_max > 0.0)) throw DomainError("grid x_max must be > 0");
    if (grid.n < 4) throw DomainError("grid needs n >= 4");
}

ScaleGrid::Metadata metadata_for(const LaplaceExponent& e, double q, ScaleMethod method) {
    ScaleGrid::Metadata m;
    m.q = q;
    m.killing = e.killing;
    m.exponent = e.kind;
    m.delta = e.delta;
    m.truncation = e.truncation;
    m.method = method;
    if (e.has_jumps() && e.jumps.kind == JumpKind::Fixed) m.kink = e.jumps.size;
    return m;
}

ScaleGrid quadratic_grid(double a2, double a1, double q, const GridSpec& grid, ScaleGrid::Metadata meta) {
    if (!(a2 > 0.0)) throw DomainError("scale_closed_quadratic: a2 must be > 0");
    if (!(q >= 0.0)) throw DomainError("scale_closed_quadratic: q must be >= 0");
    check_grid(grid);

    // roots of a2 t^2 + a1 t - q, computed without cancellation
    const double root_disc = std::sqrt(a1 * a1 + 4.0 * a2 * q);
    double tp;
    double tm;
    if (a1 <= 0.0) {
        tp = (-a1 + root_disc) / (2.0 * a2);
        tm = tp > 0.0 ? -q / (a2 * tp) : (-a1 - root_disc) / (2.0 * a2);
    } else {
        tm = (-a1 - root_disc) / (2.0 * a2);
        tp = -q / (a2 * tm);
    }
    const double gap = root_disc / a2;  // tp - tm
    meta.right_root = tp;

    auto eval = [a2, q, tp, tm, gap](double x) -> std::array<double, 3> {
        if (!(gap > 0.0)) return {x / a2, 1.0 / a2, 1.0};  // double root at 0 (q = 0, a1 = 0)
        auto integral_exp = [](double r, double y) { return r == 0.0 ? y : std::expm1(r * y) / r; };
        return {std::exp(tp * x) * (-std::expm1(-gap * x)) / (a2 * gap),
                (tp * std::exp(tp * x) - tm * std::exp(tm * x)) / (a2 * gap),
                q == 0.0 ? 1.0 : 1.0 + q * (integral_exp(tp, x) - integral_exp(tm, x)) / (a2 * gap)};
    };
    const int n = grid.n;
    const double h = grid.x_max / n;
    std::vector<double> w(n + 1);
    std::vector<double> wp(n + 1);
    std::vector<double> z(n + 1);
    for (int i = 0; i <= n; ++i) {
        const auto v = eval(i * h);
        w[i] = v[0];
        wp[i] = v[1];
        z[i] = v[2];
    }
    ScaleGrid out(meta, grid.x_max, std::move(w), std::move(wp), std::move(z));
    out.set_evaluator(eval);
    return out;
}

// Polynomials are stored by ascending powers.
using Poly = std::vector<double>;

double poly_eval(const Poly& p, double x) {
    double acc = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
    return acc;
}

Poly poly_derivative(const Poly& p) {
    Poly d;
    for (std::size_t k = 1; k < p.size(); ++k) d.push_back(static_cast<double>(k) * p[k]);
    if (d.empty()) d.push_back(0.0);
    return d;
}

double polish(const Poly& p, double r) {
    const Poly d = poly_derivative(p);
    for (int it = 0; it < 8; ++it) {
        const double dv = poly_eval(d, r);
        if (dv == 0.0) break;
        const double step = poly_eval(p, r) / dv;
        r -= step;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(r))) break;
    }
    return r;
}

std::vector<double> integrate_z(const std::vector<double>& w, const std::vector<double>& wp, double h, double qe) {
    std::vector<double> z(w.size());
    z[0] = 1.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        // trapezoid with endpoint derivative correction
        const double seg = 0.5 * h * (w[i] + w[i + 1]) - h * h / 12.0 * (wp[i + 1] - wp[i]);
        z[i + 1] = z[i] + qe * seg;
    }
    return z;
}

// Bounded variation with jumps of fixed size m: with c = -D and r = q + lambda,
//   1/(c t - r + lambda e^{-t m}) = sum_k (-lambda)^k e^{-k m t} / (c t - r)^{k+1},
// which inverts term by term to a finite sum on [0, x].
struct FixedClaimSeries {
    long double c;
    long double lam;
    long double m;
    long double r;

    std::array<double, 3> operator()(double xd) const {
        const long double x = xd;
        long double sw = 0.0L;
        long double swp = 0.0L;
        long double biggest = 0.0L;
        for (int k = 0; k * m <= x; ++k) {
            const long double u = x - k * m;
            const long double sign = k % 2 == 0 ? 1.0L : -1.0L;
            const long double log_base = k * std::log(lam / c) - std::log(c) + r * u / c;
            // (lambda/c)^k / c * e^{r u / c} * u^k / k!
            long double t0 = 0.0L;
            if (k == 0) {
                t0 = std::exp(log_base);
            } else if (u > 0) {
                t0 = std::exp(log_base + k * std::log(u) - std::lgamma(k + 1.0L));
            }
            // the derivative also picks up u^{k-1}/(k-1)!
            long double t1 = 0.0L;
            if (k == 1) {
                t1 = std::exp(log_base);
            } else if (k > 1 && u > 0) {
                t1 = std::exp(log_base + (k - 1) * std::log(u) - std::lgamma(static_cast<long double>(k)));
            }
            sw += sign * t0;
            swp += sign * (t1 + r / c * t0);
            biggest = std::max({biggest, t0, t1});
        }
        if (biggest > 1e13L * std::max(std::abs(sw), 1e-300L)) {
            throw DomainError("fixed-claim series loses too many digits to cancellation");
        }
        return {static_cast<double>(sw), static_cast<double>(swp), std::nan("")};
    }
};

ScaleGrid fixed_claim_grid(const LaplaceExponent& e, double q, const GridSpec& grid, ScaleGrid::Metadata meta) {
    const long double qe = q + e.killing;
    const FixedClaimSeries series{e.bv_drift(), e.jumps.rate, e.jumps.size, qe + e.jumps.rate};
    const int n = grid.n;
    const double h = grid.x_max / n;
    std::vector<double> w(n + 1);
    std::vector<double> wp(n + 1);
    for (int i = 0; i <= n; ++i) {
        const auto v = series(i * h);
        w[i] = v[0];
        wp[i] = v[1];
    }
    std::vector<double> z = integrate_z(w, wp, h, static_cast<double>(qe));
    ScaleGrid out(meta, grid.x_max, std::move(w), std::move(wp), std::move(z));
    out.set_evaluator(series);
    return out;
}

} // namespace

ScaleGrid scale_closed_quadratic(double a2, double a1, double q, const GridSpec& grid) {
    ScaleGrid::Metadata meta;
    meta.q = q;
    meta.method = ScaleMethod::ClosedFormQuadratic;
    return quadratic_grid(a2, a1, q, grid, meta);
}

ScaleGrid scale_cramer_lundberg(const LaplaceExponent& e, double q, const GridSpec& grid) {
    check_grid(grid);
    if (!(q >= 0.0)) throw DomainError("scale_cramer_lundberg: q must be >= 0");
    const bool exp_jumps = e.jumps.kind == JumpKind::Exponential && std::isinf(e.truncation);
    const bool fixed_claims = e.jumps.kind == JumpKind::Fixed && e.has_jumps() && e.bounded_variation();
    if (!exp_jumps && !fixed_claims && e.has_jumps()) {
        throw DomainError("scale_cramer_lundberg: needs untruncated exponential jumps, bounded-variation fixed "
                          "jumps or none");
    }
    if (!e.admissible()) throw DomainError("scale_cramer_lundberg: exponent not admissible");
    if (fixed_claims) {
        ScaleGrid::Metadata meta = metadata_for(e, q, ScaleMethod::ClosedFormCramerLundberg);
        meta.right_root = right_inverse(e, q);
        return fixed_claim_grid(e, q, grid, meta);
    }

    const double qe = q + e.killing;
    const double D = e.drift;
    const double s2 = e.sigma2;
    Poly num;
    Poly den;
    if (exp_jumps) {
        const double mu = e.jumps.mu;
        const double lam = e.jumps.rate;
        // (s2/2 t^2 - D t - qe)(mu + t) - lam t
        num = {mu, 1.0};
        den = {-qe * mu, -D * mu - qe - lam, 0.5 * s2 * mu - D, 0.5 * s2};
    } else {
        num = {1.0};
        den = {-qe, -D, 0.5 * s2};
    }
    while (den.size() > 1 && den.back() == 0.0) den.pop_back();
    const int degree = static_cast<int>(den.size()) - 1;

    // Largest root from the convex exponent, remaining ones by deflation.
    std::vector<double> roots;
    const double r1 = right_inverse(e, q);
    roots.push_back(polish(den, r1));
    if (degree >= 2) {
        // synthetic division by (t - r1)
        Poly quo(degree);
        double carry = 0.0;
        for (int k = degree; k >= 1; --k) {
            carry = den[k] + carry * roots[0];
            quo[k - 1] = carry;
        }
        if (degree == 2) {
            roots.push_back(polish(den, -quo[0] / quo[1]));
        } else {
            const double A = quo[2];
            const double B = quo[1];
            const double C = quo[0];
            const double disc = B * B - 4.0 * A * C;
            if (disc < 0.0) throw DomainError("scale_cramer_lundberg: complex roots");
            const double sq = std::sqrt(disc);
            const double t = -0.5 * (B + std::copysign(sq, B));
            roots.push_back(polish(den, t / A));
            roots.push_back(polish(den, C / t));
        }
    }
    for (std::size_t i = 0; i < roots.size(); ++i) {
        for (std::size_t j = i + 1; j < roots.size(); ++j) {
            if (std::abs(roots[i] - roots[j]) < 1e-7 * (1.0 + std::abs(roots[i]))) {
                throw DomainError("scale_cramer_lundberg: repeated root");
            }
        }
    }

    const Poly dden = poly_derivative(den);
    std::vector<double> coef;
    for (double r : roots) coef.push_back(poly_eval(num, r) / poly_eval(dden, r));

    ScaleGrid::Metadata meta = metadata_for(e, q, ScaleMethod::ClosedFormCramerLundberg);
    meta.right_root = r1;
    const bool bv = e.bounded_variation();
    auto eval = [roots, coef, qe, bv](double x) -> std::array<double, 3> {
        double sw = 0.0;
        double swp = 0.0;
        double sz = 0.0;
        for (std::size_t k = 0; k < roots.size(); ++k) {
            const double r = roots[k];
            const double ex = std::exp(r * x);
            sw += coef[k] * ex;
            swp += coef[k] * r * ex;
            sz += coef[k] * (r == 0.0 ? x : std::expm1(r * x) / r);
        }
        return {x == 0.0 && !bv ? 0.0 : std::max(sw, 0.0), swp, 1.0 + qe * sz};
    };
    const int n = grid.n;
    const double h = grid.x_max / n;
    std::vector<double> w(n + 1);
    std::vector<double> wp(n + 1);
    std::vector<double> z(n + 1);
    for (int i = 0; i <= n; ++i) {
        const auto v = eval(i * h);
        w[i] = v[0];
        wp[i] = v[1];
        z[i] = v[2];
    }
    ScaleGrid out(meta, grid.x_max, std::move(w), std::move(wp), std::move(z));
    out.set_evaluator(eval);
    return out;
}

ScaleGrid scale_laplace_inversion(const LaplaceExponent& e, double q, const GridSpec& grid,
                                  const InversionOptions& opts) {
    check_grid(grid);
    if (!(q >= 0.0)) throw DomainError("scale_laplace_inversion: q must be >= 0");
    if (!e.admissible()) throw DomainError("scale_laplace_inversion: exponent not admissible");

    // Invert the damped function g(x) = e^{-c x} W(x), c = Phi(q), whose
    // transform 1/(psi(s + c) - q) has no singularity in Re s > 0.
    const double c = right_inverse(e, q);
    const long double lc = c;
    const long double lq = q;
    const ComplexTransform damped = [&](std::complex<long double> s) {
        return 1.0L / (e(s + lc) - lq);
    };
    const EulerInverter inverter(opts.terms, opts.precision);

    const int n = grid.n;
    const double h = grid.x_max / n;
    std::vector<double> g(n + 1);
    std::vector<double> err(n + 1, 0.0);
    g[0] = e.bounded_variation() ? 1.0 / e.bv_drift() : 0.0;
    double g_scale = std::abs(g[0]);
    for (int i = 1; i <= n; ++i) {
        const auto r = inverter.invert(damped, i * h);
        g[i] = r.value;
        err[i] = r.error_estimate;
        g_scale = std::max(g_scale, std::abs(r.value));
    }
    const double threshold = std::pow(10.0, -opts.precision / 2.0) * g_scale;
    for (int i = 1; i <= n; ++i) {
        if (!(err[i] <= threshold)) {
            throw InversionUnstable("scale_laplace_inversion: Euler sums did not contract at x = " +
                                    std::to_string(i * h) + " (estimate " + std::to_string(err[i]) +
                                    ", threshold " + std::to_string(threshold) + ")");
        }
    }

    std::vector<double> w(n + 1);
    std::vector<double> wp(n + 1);
    std::vector<double> z(n + 1);
    for (int i = 0; i <= n; ++i) {
        double dg;
        if (i == 0) {
            dg = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h);
        } else if (i == n) {
            dg = (3.0 * g[n] - 4.0 * g[n - 1] + g[n - 2]) / (2.0 * h);
        } else {
            dg = (g[i + 1] - g[i - 1]) / (2.0 * h);
        }
        const double ex = std::exp(c * i * h);
        w[i] = std::max(g[i], 0.0) * ex;
        wp[i] = (dg + c * g[i]) * ex;
    }
    z = integrate_z(w, wp, h, q + e.killing);
    ScaleGrid::Metadata meta = metadata_for(e, q, ScaleMethod::LaplaceInversion);
    meta.right_root = c;
    return ScaleGrid(meta, grid.x_max, std::move(w), std::move(wp), std::move(z));
}

ScaleGrid build_scale_grid(const LaplaceExponent& e, double q, const GridSpec& grid,
                           const InversionOptions& opts, std::optional<ScaleMethod> force) {
    const bool quadratic = !e.has_jumps() && e.sigma2 > 0.0;
    const bool rational = !e.has_jumps() || (e.jumps.kind == JumpKind::Exponential && std::isinf(e.truncation)) ||
                          (e.jumps.kind == JumpKind::Fixed && e.bounded_variation());
    ScaleMethod method = quadratic  ? ScaleMethod::ClosedFormQuadratic
                         : rational ? ScaleMethod::ClosedFormCramerLundberg
                                    : ScaleMethod::LaplaceInversion;
    if (force) method = *force;

    switch (method) {
    case ScaleMethod::ClosedFormQuadratic: {
        if (e.has_jumps()) throw DomainError("quadratic closed form requested for an exponent with jumps");
        ScaleGrid::Metadata meta = metadata_for(e, q, ScaleMethod::ClosedFormQuadratic);
        return quadratic_grid(0.5 * e.sigma2, -e.drift, q + e.killing, grid, meta);
    }
    case ScaleMethod::ClosedFormCramerLundberg:
        try {
            return scale_cramer_lundberg(e, q, grid);
        } catch (const DomainError&) {
            if (force) throw;
            return scale_laplace_inversion(e, q, grid, opts);
        }
    case ScaleMethod::LaplaceInversion: break;
    }
    return scale_laplace_inversion(e, q, grid, opts);
}

std::vector<double> kink_points(const ScaleGrid& grid, double up_to) {
    std::vector<double> out;
    const double m = grid.meta().kink;
    if (m > 0.0) {
        for (int j = 1; j * m < up_to; ++j) out.push_back(j * m);
    }
    return out;
}

double refraction_convolution(const ScaleGrid& plain, const ScaleGrid& refracted, double a, double x,
                              double b, ConvolutionKernel mode) {
    if (plain.q() != refracted.q()) throw DomainError("refraction_convolution: grids built at different q");
    const double hi = a - x;
    const double lo = a - b;
    if (!(hi > lo)) return 0.0;
    if (hi > plain.x_max() * (1.0 + 1e-12) || hi > refracted.x_max() * (1.0 + 1e-12)) {
        throw DomainError("refraction_convolution: grids do not cover [0, a - x]");
    }
    const double lo_c = std::max(lo, 0.0);
    double atom = 0.0;
    if (mode == ConvolutionKernel::DerivativeKernel && lo <= 0.0) atom = plain.W(0.0) * refracted.W(hi);

    SimpsonRefinement opts;
    opts.rel_tol = 1e-12;
    opts.min_panel_width = std::min(plain.spacing(), refracted.spacing()) / 64.0;

    // split where either factor has a derivative jump
    std::vector<double> cuts;
    for (const double k : kink_points(plain, hi)) cuts.push_back(k);
    for (const double k : kink_points(refracted, hi)) cuts.push_back(hi - k);
    std::function<double(double)> f;
    if (mode == ConvolutionKernel::DerivativeKernel) {
        f = [&](double y) { return refracted.W(hi - y) * plain.Wprime(y); };
    } else {
        f = [&](double y) { return refracted.W(hi - y) * plain.W(y); };
    }
    const double body = simpson_piecewise(f, lo_c, hi, cuts, opts);
    return atom + body;
}

double laplace_transform_residual(const ScaleGrid& grid, const LaplaceExponent& e, double theta) {
    const double c = grid.meta().right_root;
    if (!(theta > c)) throw DomainError("laplace_transform_residual: theta must exceed Phi(q)");
    const int n = grid.n();
    const double h = grid.spacing();
    const auto& w = grid.w();
    auto f = [&](int i) { return std::exp(-theta * i * h) * w[i]; };
    double body = 0.0;
    const int even_n = n - n % 2;
    for (int i = 0; i < even_n; i += 2) body += h / 3.0 * (f(i) + 4.0 * f(i + 1) + f(i + 2));
    if (even_n != n) body += 0.5 * h * (f(n - 1) + f(n));
    const double X = grid.x_max();
    const double tail = std::exp(-theta * X) * (w[n] / theta + grid.w_prime()[n] / (theta * (theta - c)));
    const double exact = 1.0 / (e(theta) - grid.q());
    return std::abs(body + tail - exact) / std::abs(exact);
}

} // namespace rcsbp
