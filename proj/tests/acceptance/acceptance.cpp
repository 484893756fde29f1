// Acceptance suite: one PASS/FAIL line per criterion.

#include "rcsbp/cli.hpp"
#include "rcsbp/errors.hpp"
#include "rcsbp/estimate.hpp"
#include "rcsbp/functionals.hpp"
#include "rcsbp/mechanism.hpp"
#include "rcsbp/pathsim.hpp"
#include "rcsbp/scale.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace rcsbp;

namespace {

struct Model {
    std::string name;
    BranchingMechanism mech;
};

BranchingMechanism brownian(double gamma, double sigma2, double beta = 0.0) {
    BranchingMechanism m;
    m.gamma = gamma;
    m.sigma2 = sigma2;
    m.beta = beta;
    return m;
}

BranchingMechanism with_jumps(BranchingMechanism m, JumpMeasure j) {
    m.jumps = j;
    return m;
}

std::vector<Model> model_matrix() {
    BranchingMechanism bv;
    bv.gamma = -1.5;
    bv.jumps = JumpMeasure::exponential(3.0, 1.0);
    BranchingMechanism bv_fixed;
    bv_fixed.gamma = -1.0;
    bv_fixed.jumps = JumpMeasure::fixed(1.0, 0.8);
    return {{"quadratic", brownian(1.0, 1.0)},
            {"quadratic_subcritical", brownian(-0.5, 1.0)},
            {"brownian_exp", with_jumps(brownian(1.0, 1.0), JumpMeasure::exponential(1.0, 0.5))},
            {"brownian_fixed", with_jumps(brownian(1.0, 1.0), JumpMeasure::fixed(1.0, 0.5))},
            {"bv_exp", bv},
            {"bv_fixed", bv_fixed},
            {"killed_quadratic", brownian(1.0, 1.0, 0.3)},
            {"killed_brownian_exp", with_jumps(brownian(1.0, 1.0, 0.3), JumpMeasure::exponential(1.0, 0.5))}};
}

struct Criterion {
    int id;
    std::string title;
    std::function<bool(std::ostringstream&)> run;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

bool within_mc(double formula, const MCEstimate& mc, std::ostringstream& log, const std::string& label) {
    const double gap = std::abs(formula - mc.value);
    const double tol = 3.0 * mc.std_error + mc.horizon_bias_bound;
    log << "  " << label << ": formula " << formula << " mc " << mc.value << " se " << mc.std_error << " bias "
        << mc.horizon_bias_bound << " |d|/se " << (mc.std_error > 0 ? gap / mc.std_error : 0.0)
        << (gap <= tol ? "" : "  <-- outside 3 SE + bias") << "\n";
    return gap <= tol;
}

// 1. Inverted versus closed-form scale functions and the transform identity.
bool criterion1(std::ostringstream& log) {
    const BranchingMechanism mech = brownian(1.0, 1.0);
    const LaplaceExponent e = plain_exponent(mech);
    const GridSpec grid{5.0, 4096};
    bool ok = true;
    for (double q : {0.0, 0.5, 2.0}) {
        const ScaleGrid cf = build_scale_grid(e, q, grid, {}, ScaleMethod::ClosedFormQuadratic);
        const ScaleGrid inv = build_scale_grid(e, q, grid, {}, ScaleMethod::LaplaceInversion);
        const double phi = cf.meta().right_root;
        double sup = 0.0;
        for (int i = 0; i <= grid.n; ++i) {
            sup = std::max(sup, std::exp(-phi * cf.x(i)) * std::abs(cf.w()[i] - inv.w()[i]));
        }
        double residual = 0.0;
        for (double k : {2.0, 3.0, 5.0, 10.0}) {
            const double theta = std::max(k * phi, k);
            residual = std::max(residual, laplace_transform_residual(cf, e, theta));
            residual = std::max(residual, laplace_transform_residual(inv, e, theta));
        }
        log << "  q=" << q << ": sup_x e^{-Phi x}|W_inv - W_cf| = " << sup << ", max LT residual = " << residual
            << "\n";
        ok = ok && sup < 1e-6 && residual < 1e-4;
    }
    return ok;
}

// 2. delta = 0 reductions over the model matrix.
bool criterion2(std::ostringstream& log) {
    bool ok = true;
    double worst_exit = 0.0;
    double worst_ext = 0.0;
    const FunctionalOptions fo;
    for (const Model& m : model_matrix()) {
        const RefractionSpec r{0.0, 1.0};
        for (double q : {0.0, 0.3, 1.0}) {
            for (double x : {0.0, 0.3, 1.0, 1.7}) {
                const double a = 2.0;
                const double v = exit_down_transform({x, a, q}, m.mech, r, fo).value;
                GridSpec g{a, fo.n};
                const ScaleGrid w = build_scale_grid(plain_exponent(m.mech), q, g, fo.inversion);
                const double expected = w.W(a - x) / w.W(a);
                worst_exit = std::max(worst_exit, std::abs(v - expected));
                const double ext = extinction_transform(x, q, m.mech, r, fo).value;
                const double phi = psi_right_inverse(m.mech, q);
                worst_ext = std::max(worst_ext, std::abs(ext - std::exp(-phi * x)));
            }
        }
    }
    log << "  max |exit_down - W(a-x)/W(a)| = " << worst_exit << ", max |ext - e^{-Phi x}| = " << worst_ext << "\n";
    ok = worst_exit == 0.0 && worst_ext < 1e-10;
    return ok;
}

// 3. Partition identity for beta = 0 and q = 0.
bool criterion3(std::ostringstream& log) {
    double worst = 0.0;
    const FunctionalOptions fo;
    int count = 0;
    for (const Model& m : model_matrix()) {
        if (m.mech.beta != 0.0) continue;
        for (double a : {1.0, 2.0, 3.5}) {
            for (double xf : {0.1, 0.45, 0.8}) {
                for (double bf : {0.25, 0.6, 0.95}) {
                    const RefractionSpec r{0.5, bf * a};
                    const ExitQuery qy{xf * a, a, 0.0};
                    const double s = exit_down_transform(qy, m.mech, r, fo).value +
                                     exit_up_transform(qy, m.mech, r, fo).value;
                    worst = std::max(worst, std::abs(s - 1.0));
                    ++count;
                }
            }
        }
    }
    log << "  " << count << " queries, max |down + up - 1| = " << worst << "\n";
    return worst < 1e-6;
}

// 4. Refracted Feller diffusion extinction probability.
bool criterion4(std::ostringstream& log) {
    const double gamma = 1.0, s2 = 1.0, delta = 0.5, b = 1.0;
    auto p = [&](double x) { return diffusion_extinction(x, gamma, s2, delta, b); };
    bool ok = true;
    const double p0 = p(0.0);
    const double pinf = p(60.0);
    log << "  p(0) = " << p0 << ", p(60) = " << pinf << "\n";
    ok = ok && std::abs(p0 - 1.0) < 1e-15 && pinf < 1e-12;

    double worst = 0.0;
    const double h = 1e-4;
    for (double x = 0.05; x <= 4.0; x += 0.01) {
        if (std::abs(x - b) < 3 * h) continue;
        const double d1 = (p(x + h) - p(x - h)) / (2 * h);
        const double d2 = (p(x + h) - 2 * p(x) + p(x - h)) / (h * h);
        const double res = (gamma + (x <= b ? delta : 0.0)) * x * d1 + 0.5 * s2 * x * d2;
        worst = std::max(worst, std::abs(res));
    }
    log << "  max ODE residual away from b = " << worst << "\n";
    ok = ok && worst < 1e-6;

    const BranchingMechanism mech = brownian(gamma, s2);
    const RefractionSpec r{delta, b};
    MCConfig mc;
    mc.n_paths = 100000;
    mc.dt = 1e-3;
    mc.horizon = 200.0;
    for (double x : {0.5, 1.5}) {
        mc.seed = 4000 + static_cast<std::uint64_t>(10 * x);
        const MCEstimate est = estimate_functional(FunctionalSpec::vanish(), mech, r, x, mc);
        ok = within_mc(p(x), est, log, "x=" + fmt(x)) && ok;
    }
    return ok;
}

// 5. Exit identities against Monte Carlo.
bool criterion5(std::ostringstream& log) {
    const std::vector<Model> models = {
        {"quadratic", brownian(1.0, 1.0)},
        {"brownian_exp", with_jumps(brownian(1.0, 1.0), JumpMeasure::exponential(1.0, 0.5))}};
    const RefractionSpec r{0.5, 1.0};
    const double x = 0.5, a = 2.0;
    MCConfig mc;
    mc.n_paths = 100000;
    bool ok = true;
    std::uint64_t seed = 5000;
    for (const Model& m : models) {
        mc.seed = seed++;
        const Ensemble ens = simulate_ensemble(m.mech, r, x, a, true, mc);
        for (double q : {0.0, 0.3}) {
            const double down = exit_down_transform({x, a, q}, m.mech, r).value;
            const double up = exit_up_transform({x, a, q}, m.mech, r).value;
            ok = within_mc(down, estimate_from_ensemble(FunctionalSpec::exit_down(q, a), ens), log,
                           m.name + " down q=" + fmt(q)) && ok;
            ok = within_mc(up, estimate_from_ensemble(FunctionalSpec::exit_up(q, a), ens), log,
                           m.name + " up q=" + fmt(q)) && ok;
        }
    }
    return ok;
}

// 6. Sup-level probability tends to the vanishing probability.
bool criterion6(std::ostringstream& log) {
    const BranchingMechanism mech = brownian(1.0, 1.0);
    const RefractionSpec r{0.5, 1.0};
    const double x = 0.5;
    const double target = vanish_probability(x, mech, r).value;
    std::vector<double> gaps;
    for (double a : {10.0, 20.0, 40.0}) {
        const double v = sup_below_probability(x, a, mech, r).value;
        gaps.push_back(std::abs(v - target));
        log << "  a=" << a << ": sup_below = " << v << " (vanish " << target << ", gap " << gaps.back() << ")\n";
    }
    bool ok = gaps[0] >= gaps[1] && gaps[1] >= gaps[2] && gaps[2] < 1e-3;

    // beyond a = 20 the gap is at rounding level, so also check strict decrease
    // where it is resolvable
    double prev = 1.0;
    bool strict = true;
    for (double a : {1.5, 2.0, 3.0, 5.0, 10.0}) {
        const double gap = std::abs(sup_below_probability(x, a, mech, r).value - target);
        strict = strict && gap < prev;
        log << "  a=" << a << ": gap " << gap << "\n";
        prev = gap;
    }
    log << "  strictly decreasing for a in {1.5, 2, 3, 5, 10}: " << (strict ? "yes" : "no") << "\n";
    return ok && strict;
}

// 7. Maximal jump distribution.
bool criterion7(std::ostringstream& log) {
    bool ok = true;
    const RefractionSpec r{0.5, 1.0};
    const double x = 0.5;
    const BranchingMechanism fixed = with_jumps(brownian(1.0, 1.0), JumpMeasure::fixed(1.0, 0.5));
    const double v = vanish_probability(x, fixed, r).value;
    for (double y : {0.5, 0.75, 2.0}) {
        const double mj = max_jump_cdf(x, y, fixed, r).value;
        log << "  fixed m=0.5, y=" << y << ": |max_jump - vanish| = " << std::abs(mj - v) << "\n";
        ok = ok && std::abs(mj - v) < 1e-10;
    }

    const BranchingMechanism bexp = with_jumps(brownian(1.0, 1.0), JumpMeasure::exponential(1.0, 0.5));
    MCConfig mc;
    mc.n_paths = 100000;
    mc.seed = 7000;
    const Ensemble ens = simulate_ensemble(bexp, r, x, kInf, false, mc);
    double prev = -1.0;
    for (double y : {0.5, 1.0, 2.0}) {
        const double f = max_jump_cdf(x, y, bexp, r).value;
        ok = within_mc(f, estimate_from_ensemble(FunctionalSpec::max_jump_cdf(y), ens), log, "exp y=" + fmt(y)) && ok;
        ok = ok && f >= prev;
        prev = f;
    }
    double last = -1.0;
    bool monotone = true;
    for (double y = 0.1; y <= 4.0; y += 0.3) {
        const double f = max_jump_cdf(x, y, bexp, r).value;
        monotone = monotone && f >= last;
        last = f;
    }
    log << "  nondecreasing in y on [0.1, 4]: " << (monotone ? "yes" : "no") << "\n";
    return ok && monotone;
}

// 8. Martingale diagnostic.
bool criterion8(std::ostringstream& log) {
    const std::vector<Model> models = {
        {"quadratic", brownian(1.0, 1.0)},
        {"killed_brownian_exp", with_jumps(brownian(1.0, 1.0, 0.3), JumpMeasure::exponential(1.0, 0.5))}};
    const RefractionSpec r{0.5, 1.0};
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(0.1 * i);
    bool ok = true;
    std::uint64_t seed = 8000;
    for (const Model& m : models) {
        for (double l : {1.0, 2.0}) {
            const MartingaleReport rep =
                martingale_check(TestFunction::exponential(l), m.mech, r, 0.5, grid, 100000, seed++);
            log << "  " << m.name << ", f=exp(-" << l << "x): flatness " << rep.flatness << "\n";
            ok = ok && rep.flatness <= 4.0;
        }
    }
    return ok;
}

// 9. Explosion classification.
bool criterion9(std::ostringstream& log) {
    bool ok = true;
    for (const Model& m : model_matrix()) {
        const RefractionSpec r{0.5, 1.0};
        const ExplosionReport rep = classify_explosion(m.mech, r);
        log << "  " << m.name << ": jumps_to_infinity=" << rep.jumps_to_infinity
            << " plain=" << to_string(rep.ogura_grey_plain) << " delta=" << to_string(rep.ogura_grey_delta)
            << "\n";
        if (m.mech.beta > 0.0) {
            ok = ok && rep.jumps_to_infinity;
        } else {
            ok = ok && !rep.jumps_to_infinity && rep.ogura_grey_plain == OguraGrey::NonExplosive &&
                 rep.ogura_grey_delta == OguraGrey::NonExplosive;
        }
    }
    return ok;
}

// 10. Byte-identical verify summaries.
bool criterion10(std::ostringstream& log) {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "rcsbp_acceptance_determinism";
    fs::remove_all(root);
    std::vector<std::string> contents;
    // the same command twice into the same directory (the header records it)
    const std::string dir = (root / "out").string();
    for (const char* run : {"run1", "run2"}) {
        fs::remove_all(dir);
        std::string status;
        if (const char* cli = std::getenv("RCSBP_CLI")) {
            const std::string cmd =
                std::string(cli) + " verify --paths 4000 --seed 11 --out " + dir + " > " + (root / run).string() + ".log 2>&1";
            fs::create_directories(root);
            const int rc = std::system(cmd.c_str());
            status = "external binary, status " + std::to_string(rc);
        } else {
            std::ostringstream out, err;
            const std::vector<std::string> args = {"rcsbp", "verify", "--paths", "4000", "--seed", "11", "--out", dir};
            std::vector<const char*> argv;
            for (const auto& s : args) argv.push_back(s.c_str());
            const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            status = "in-process, status " + std::to_string(rc);
        }
        std::ifstream f(fs::path(dir) / "verify_summary.csv", std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        contents.push_back(ss.str());
        log << "  " << run << ": " << status << ", " << contents.back().size() << " bytes\n";
    }
    std::size_t rows = 0;
    for (char ch : contents[0]) rows += ch == '\n';
    rows = rows >= 2 ? rows - 2 : 0;
    log << "  summary rows: " << rows << "\n";
    return !contents[0].empty() && contents[0] == contents[1] && rows >= 12;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> criteria = {
        {1, "scale functions: inversion vs closed form, transform identity", criterion1},
        {2, "classical reduction at delta = 0", criterion2},
        {3, "exit partition identity", criterion3},
        {4, "diffusion extinction probability", criterion4},
        {5, "exit identities vs Monte Carlo", criterion5},
        {6, "sup-level limit", criterion6},
        {7, "maximal jump distribution", criterion7},
        {8, "martingale diagnostic", criterion8},
        {9, "explosion classification", criterion9},
        {10, "verify determinism", criterion10}};

    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        std::ostringstream log;
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = c.run(log);
        } catch (const std::exception& e) {
            log << "  exception: " << e.what() << "\n";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " (" << fmt(secs)
                  << " s)\n"
                  << log.str() << std::flush;
        failures += ok ? 0 : 1;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
    return failures == 0 ? 0 : 1;
}
