#pragma once

#include <functional>
#include <vector>

namespace rcsbp {

/// Composite Simpson rule with `panels` (even) subintervals.
double simpson(const std::function<double(double)>& f, double lo, double hi, int panels);

struct SimpsonRefinement {
    double rel_tol = 1e-8;
    double abs_tol = 1e-300;
    int initial_panels = 16;
    /// Refinement stops with GridTooCoarse once the panel width drops below
    /// this value without two successive estimates agreeing.
    double min_panel_width = 0.0;
    int max_panels = 1 << 20;
};

/// Composite Simpson with panel doubling until two successive values agree.
/// Empty or reversed intervals integrate to 0.
double simpson_refined(const std::function<double(double)>& f, double lo, double hi,
                       const SimpsonRefinement& opts = {});

/// simpson_refined on each piece of [lo, hi] cut at `cuts`, where f may jump.
/// f is sampled with one-sided limits at the cuts.
double simpson_piecewise(const std::function<double(double)>& f, double lo, double hi, std::vector<double> cuts,
                         const SimpsonRefinement& opts = {});

} // namespace rcsbp
