#pragma once

#include <functional>

namespace rcsbp {

using RealFunction = std::function<double(double)>;

struct RootOptions {
    double f_tol = 1e-12;     ///< absolute tolerance on f(x) - target
    int max_iterations = 200;
};

/// Root of an increasing function on [lo, hi] with f(lo) <= 0 <= f(hi).
/// Newton steps from the right, falling back to bisection whenever a step
/// leaves the bracket. Throws NonConvergence.
double bracketed_newton(const RealFunction& f, const RealFunction& df, double lo, double hi,
                        const RootOptions& opts = {});

/// Largest root of f(x) = target on [0, inf) for a convex f with
/// f(0) <= target and f(x) -> inf. The bracket is grown by doubling from
/// [0, 1]. Throws NonConvergence.
double convex_right_root(const RealFunction& f, const RealFunction& df, double target,
                         const RootOptions& opts = {});

/// Plain bisection for a sign change on [lo, hi].
double bisect(const RealFunction& f, double lo, double hi, double x_tol = 1e-14,
              int max_iterations = 200);

} // namespace rcsbp
