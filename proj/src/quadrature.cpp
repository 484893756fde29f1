#include "rcsbp/quadrature.hpp"

#include "rcsbp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace rcsbp {

double simpson(const std::function<double(double)>& f, double lo, double hi, int panels) {
    if (panels < 2) panels = 2;
    if (panels % 2 != 0) ++panels;
    const double h = (hi - lo) / panels;
    double odd = 0.0;
    double even = 0.0;
    for (int i = 1; i < panels; ++i) {
        const double v = f(lo + i * h);
        if (i % 2 == 1) {
            odd += v;
        } else {
            even += v;
        }
    }
    return h / 3.0 * (f(lo) + f(hi) + 4.0 * odd + 2.0 * even);
}

double simpson_refined(const std::function<double(double)>& f, double lo, double hi,
                       const SimpsonRefinement& opts) {
    if (!(hi > lo)) return 0.0;

    // Nodes are reused across doublings: keep the running sums of the
    // endpoint, interior-even and interior-odd evaluations.
    int n = std::max(2, opts.initial_panels + opts.initial_panels % 2);
    double h = (hi - lo) / n;
    const double ends = f(lo) + f(hi);
    double even = 0.0;
    double odd = 0.0;
    for (int i = 1; i < n; ++i) {
        const double v = f(lo + i * h);
        if (i % 2 == 1) {
            odd += v;
        } else {
            even += v;
        }
    }
    double prev = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
    bool refined = false;
    while (true) {
        // an interval already below the resolution gets one doubling and no test
        const bool at_limit = 2 * n > opts.max_panels || h / 2.0 < opts.min_panel_width;
        if (at_limit && refined) {
            throw GridTooCoarse("simpson_refined: no agreement to rel " + std::to_string(opts.rel_tol) +
                                " on [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                "] before reaching the grid resolution");
        }
        even += odd;
        odd = 0.0;
        n *= 2;
        h /= 2.0;
        for (int i = 1; i < n; i += 2) odd += f(lo + i * h);
        const double cur = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
        if (at_limit || std::abs(cur - prev) <= std::max(opts.abs_tol, opts.rel_tol * std::abs(cur))) return cur;
        prev = cur;
        refined = true;
    }
}

double simpson_piecewise(const std::function<double(double)>& f, double lo, double hi, std::vector<double> cuts,
                         const SimpsonRefinement& opts) {
    if (!(hi > lo)) return 0.0;
    std::erase_if(cuts, [&](double c) { return !(c > lo && c < hi); });
    cuts.push_back(lo);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    const double scale = std::max(std::abs(lo), std::abs(hi));
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double l = cuts[k];
        const double r = cuts[k + 1];
        if (r - l <= 1e-14 * scale) continue;
        const double l_in = std::nextafter(l, r);
        const double r_in = std::nextafter(r, l);
        total += simpson_refined([&](double y) { return f(std::clamp(y, l_in, r_in)); }, l, r, opts);
    }
    return total;
}

} // namespace rcsbp
