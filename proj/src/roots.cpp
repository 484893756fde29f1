#include "rcsbp/roots.hpp"

#include "rcsbp/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace rcsbp {

namespace {

constexpr int kMaxDoublings = 200;

bool collapsed(double lo, double hi) {
    return hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi));
}

} // namespace

double bracketed_newton(const RealFunction& f, const RealFunction& df, double lo, double hi,
                        const RootOptions& opts) {
    double flo = f(lo);
    double fhi = f(hi);
    if (std::abs(flo) <= opts.f_tol) return lo;
    if (std::abs(fhi) <= opts.f_tol) return hi;
    if (flo > 0.0 || fhi < 0.0) {
        throw DomainError("bracketed_newton: no sign change on [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    }
    double x = hi;
    double fx = fhi;
    for (int it = 0; it < opts.max_iterations; ++it) {
        const double d = df(x);
        double next = (d > 0.0 && std::isfinite(d)) ? x - fx / d : lo - 1.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
        fx = f(x);
        if (std::abs(fx) <= opts.f_tol) return x;
        if (fx < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        if (collapsed(lo, hi)) return x;
    }
    throw NonConvergence("bracketed_newton: iteration budget of " +
                         std::to_string(opts.max_iterations) + " exceeded");
}

double convex_right_root(const RealFunction& f, const RealFunction& df, double target,
                         const RootOptions& opts) {
    auto g = [&](double x) { return f(x) - target; };
    const double g0 = g(0.0);
    if (g0 > opts.f_tol) {
        throw DomainError("convex_right_root: f(0) exceeds the target");
    }

    // Locate the minimiser; the right root lies beyond it.
    double lo = 0.0;
    if (df(0.0) < 0.0) {
        double hi = 1.0;
        int n = 0;
        while (df(hi) < 0.0) {
            lo = hi;
            hi *= 2.0;
            if (++n > kMaxDoublings) throw NonConvergence("convex_right_root: minimiser not bracketed");
        }
        int it = 0;
        while (!collapsed(lo, hi)) {
            const double mid = 0.5 * (lo + hi);
            if (df(mid) < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
            if (++it > opts.max_iterations) throw NonConvergence("convex_right_root: minimiser search");
        }
    }
    if (g(lo) >= 0.0) return lo;

    double hi = std::max(1.0, 2.0 * lo);
    int n = 0;
    while (g(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++n > kMaxDoublings) throw NonConvergence("convex_right_root: root not bracketed");
    }
    return bracketed_newton(g, df, lo, hi, opts);
}

double bisect(const RealFunction& f, double lo, double hi, double x_tol, int max_iterations) {
    double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw DomainError("bisect: no sign change");
    for (int it = 0; it < max_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo <= x_tol || collapsed(lo, hi)) return 0.5 * (lo + hi);
    }
    throw NonConvergence("bisect: iteration budget exceeded");
}

} // namespace rcsbp
