#include "rcsbp/pathsim.hpp"

#include "rcsbp/errors.hpp"
#include "rcsbp/functionals.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace rcsbp {

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

int worker_count(std::size_t tasks) {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("REFRACT_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) n = v;
    }
    n = std::max(n, 1);
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(tasks, 1)));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const int workers = worker_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    constexpr std::size_t kChunk = 64;
    auto run = [&] {
        while (true) {
            const std::size_t start = next.fetch_add(kChunk);
            if (start >= n) return;
            const std::size_t stop = std::min(n, start + kChunk);
            for (std::size_t i = start; i < stop; ++i) body(i);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
}

std::string to_string(Clock clock) { return clock == Clock::LevyTime ? "levy" : "branching"; }

namespace {

// Resolved model for the Euler engine.
struct Model {
    double drift;
    double sigma;
    double sigma2;
    double delta;
    double b;
    double beta;
    JumpMeasure jumps;
};

Model resolve(const BranchingMechanism& mech, const RefractionSpec& refraction) {
    validate_model(mech, refraction);
    return {mech.drift(), std::sqrt(mech.sigma2), mech.sigma2, refraction.delta, refraction.b, mech.beta, mech.jumps};
}

double exp_clock(std::mt19937_64& rng, double rate) {
    if (!(rate > 0.0)) return kInf;
    return std::exponential_distribution<double>(rate)(rng);
}

double jump_size(const JumpMeasure& j, std::mt19937_64& rng) {
    if (j.kind == JumpKind::Fixed) return j.size;
    return std::exponential_distribution<double>(j.mu)(rng);
}

double uniform(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Probability that a Brownian bridge from u to v over time h with variance
// sigma2 touches the level `level` (both endpoints on the same side).
bool bridge_touches(double u, double v, double level, double sigma2, double h, std::mt19937_64& rng) {
    const double e = 2.0 * (u - level) * (v - level) / (sigma2 * h);
    if (!(e < 36.0)) return false;
    return uniform(rng) < std::exp(-e);
}

enum class Stop { None, Absorbed, Crossed, Killed, Escaped, Horizon, Observer };

// Observer interface (static): segment(t0, u0, t1, u1, terminal) for each
// continuous piece, jump(t, size, u_after), and done() to request a stop.
struct NullObserver {
    void segment(double, double, double, double, bool) {}
    void jump(double, double, double) {}
    bool done() const { return false; }
};

struct EngineResult {
    Stop stop = Stop::None;
    double t = 0.0;
    double u = 0.0;
    bool crossed = false;
    double crossed_at = kInf;
    double max_jump = 0.0;
};

template <class Observer>
EngineResult run_engine(const Model& m, double x0, const SimulationOptions& opts, std::mt19937_64& rng,
                        Observer& obs) {
    if (!(x0 > 0.0)) throw DomainError("simulation needs x0 > 0");
    if (!(opts.dt > 0.0)) throw DomainError("simulation needs dt > 0");
    if (!(opts.horizon > 0.0)) throw DomainError("simulation needs horizon > 0");

    std::normal_distribution<double> normal(0.0, 1.0);
    EngineResult r;
    const double a = opts.upper_level;
    const double eps0 = opts.eps0;
    double t = 0.0;
    double u = x0;
    double next_jump = exp_clock(rng, m.jumps.empty() ? 0.0 : m.jumps.rate);
    const double kill_time = opts.kill ? exp_clock(rng, m.beta) : kInf;

    auto finish = [&](Stop s, double at, double value) {
        r.stop = s;
        r.t = at;
        r.u = value;
        return r;
    };
    auto mark_cross = [&](double at) {
        if (!r.crossed) {
            r.crossed = true;
            r.crossed_at = at;
        }
    };

    if (u >= a) {
        mark_cross(0.0);
        if (opts.stop_at_upper) return finish(Stop::Crossed, 0.0, u);
    }
    if (u >= opts.escape_level) return finish(Stop::Escaped, 0.0, u);

    while (true) {
        if (t >= opts.horizon) return finish(Stop::Horizon, t, u);
        if (obs.done()) return finish(Stop::Observer, t, u);
        const double t_end = std::min({t + opts.dt, opts.horizon, next_jump, kill_time});
        double h = t_end - t;
        if (m.sigma > 0.0) {
            const double drift = m.drift + (u < m.b ? m.delta : 0.0);
            const double v = u + drift * h + m.sigma * std::sqrt(h) * normal(rng);
            if (v <= eps0) {
                const double tau = t + h * (u - eps0) / (u - v);
                obs.segment(t, u, tau, 0.0, true);
                return finish(Stop::Absorbed, tau, 0.0);
            }
            if (opts.bridge && bridge_touches(u, v, eps0, m.sigma2, h, rng)) {
                const double tau = t + 0.5 * h;
                obs.segment(t, u, tau, 0.0, true);
                return finish(Stop::Absorbed, tau, 0.0);
            }
            if (!r.crossed && u < a) {
                double ct = kInf;
                if (v >= a) {
                    ct = t + h * (a - u) / (v - u);
                } else if (opts.bridge && bridge_touches(u, v, a, m.sigma2, h, rng)) {
                    ct = t + 0.5 * h;
                }
                if (ct < kInf) {
                    mark_cross(ct);
                    if (opts.stop_at_upper) {
                        obs.segment(t, u, ct, std::max(v, a), false);
                        return finish(Stop::Crossed, ct, std::max(v, a));
                    }
                }
            }
            obs.segment(t, u, t_end, v, false);
            u = v;
            t = t_end;
        } else {
            // Piecewise deterministic motion; split exactly at b.
            const bool below = u < m.b || (u == m.b && m.drift < 0.0);
            const double drift = m.drift + (below ? m.delta : 0.0);
            if (u > m.b && drift < 0.0 && (u - m.b) / -drift < h) {
                const double tb = t + (u - m.b) / -drift;
                obs.segment(t, u, tb, m.b, false);
                t = tb;
                u = m.b;
                continue;
            }
            if (u < m.b && drift > 0.0 && (m.b - u) / drift < h) {
                const double tb = t + (m.b - u) / drift;
                obs.segment(t, u, tb, m.b, false);
                t = tb;
                u = m.b;
                continue;
            }
            if (drift < 0.0 && (u - eps0) / -drift <= h) {
                const double tau = t + (u - eps0) / -drift;
                obs.segment(t, u, tau, 0.0, true);
                return finish(Stop::Absorbed, tau, 0.0);
            }
            const double v = u + drift * h;
            if (!r.crossed && u < a && v >= a) {
                const double ct = t + (a - u) / drift;
                mark_cross(ct);
                if (opts.stop_at_upper) {
                    obs.segment(t, u, ct, a, false);
                    return finish(Stop::Crossed, ct, a);
                }
            }
            obs.segment(t, u, t_end, v, false);
            u = v;
            t = t_end;
        }

        if (t_end == kill_time) return finish(Stop::Killed, t, u);
        if (t_end == next_jump) {
            const double size = jump_size(m.jumps, rng);
            u += size;
            r.max_jump = std::max(r.max_jump, size);
            obs.jump(t, size, u);
            next_jump = t + exp_clock(rng, m.jumps.rate);
            if (!r.crossed && u >= a) {
                mark_cross(t);
                if (opts.stop_at_upper) return finish(Stop::Crossed, t, u);
            }
        }
        if (u >= opts.escape_level) return finish(Stop::Escaped, t, u);
    }
}

struct Recorder {
    PathSample* path;
    void segment(double, double, double t1, double u1, bool) {
        path->times.push_back(t1);
        path->values.push_back(u1);
    }
    void jump(double t, double size, double u_after) {
        path->jumps.push_back({t, size});
        path->values.back() = u_after;
    }
    bool done() const { return false; }
};

} // namespace

PathSample simulate_refracted(const BranchingMechanism& mech, const RefractionSpec& refraction, double x0,
                              const SimulationOptions& opts, std::mt19937_64& rng) {
    const Model m = resolve(mech, refraction);
    PathSample path;
    path.clock = Clock::LevyTime;
    path.dt = opts.dt;
    path.times.push_back(0.0);
    path.values.push_back(x0);
    Recorder rec{&path};
    const EngineResult r = run_engine(m, x0, opts, rng, rec);
    if (r.stop == Stop::Absorbed) path.hit_zero_at = r.t;
    if (r.stop == Stop::Killed) path.killed_at = r.t;
    if (r.crossed) path.crossed_a_at = r.crossed_at;
    path.max_jump = r.max_jump;
    // Steps cut at b in the deterministic case can repeat a time stamp only
    // if a step has zero length; drop such duplicates.
    std::size_t w = 1;
    for (std::size_t i = 1; i < path.times.size(); ++i) {
        if (path.times[i] > path.times[w - 1]) {
            path.times[w] = path.times[i];
            path.values[w] = path.values[i];
            ++w;
        } else {
            path.values[w - 1] = path.values[i];
        }
    }
    path.times.resize(w);
    path.values.resize(w);
    return path;
}

PathSample simulate_refracted(const BranchingMechanism& mech, const RefractionSpec& refraction, double x0,
                              double horizon, double dt, std::uint64_t seed) {
    SimulationOptions opts;
    opts.horizon = horizon;
    opts.dt = dt;
    auto rng = path_rng(seed, 0);
    return simulate_refracted(mech, refraction, x0, opts, rng);
}

PathSample lamperti_transform(const PathSample& levy, double x0, const LampertiOptions& opts) {
    if (levy.clock != Clock::LevyTime) throw DomainError("lamperti_transform needs a Levy-clock path");
    if (levy.values.empty() || !(x0 > 0.0) || levy.values.front() != x0) {
        throw DomainError("lamperti_transform: path must start at x0 > 0");
    }
    const std::size_t n = levy.times.size();
    // i at each Levy grid point; pre-jump end values for the trapezoid.
    std::vector<double> clock(n, 0.0);
    bool overflow = false;
    std::size_t last = n - 1;
    std::size_t jump_idx = 0;
    for (std::size_t k = 1; k < n; ++k) {
        const double h = levy.times[k] - levy.times[k - 1];
        double end = levy.values[k];
        while (jump_idx < levy.jumps.size() && levy.jumps[jump_idx].time < levy.times[k]) ++jump_idx;
        if (jump_idx < levy.jumps.size() && levy.jumps[jump_idx].time == levy.times[k]) {
            end -= levy.jumps[jump_idx].size;
        }
        const bool terminal = levy.hit_zero_at && k == n - 1;
        const double inc = terminal ? h / levy.values[k - 1] : 0.5 * h * (1.0 / levy.values[k - 1] + 1.0 / end);
        clock[k] = clock[k - 1] + inc;
        if (clock[k] > opts.clock_cap) {
            overflow = true;
            last = k;
            break;
        }
    }

    PathSample out;
    out.clock = Clock::BranchingTime;
    out.clock_overflow = overflow;
    const double ds = opts.ds > 0.0 ? opts.ds : (levy.dt > 0.0 ? levy.dt : 1e-3);
    const double s_end = opts.horizon > 0.0 ? opts.horizon : clock[last];
    out.dt = ds;

    std::size_t k = 0;
    const auto steps = static_cast<std::size_t>(std::floor(s_end / ds + 1e-9));
    for (std::size_t j = 0; j <= steps; ++j) {
        const double s = j * ds;
        if (s > clock[last]) {
            if (levy.hit_zero_at && !overflow) {
                out.times.push_back(s);
                out.values.push_back(0.0);
                out.progeny.push_back(*levy.hit_zero_at);
                continue;
            }
            break;
        }
        while (k + 1 <= last && clock[k + 1] <= s) ++k;
        double c = levy.times[k];
        if (k < last && clock[k + 1] > clock[k]) {
            c += (s - clock[k]) / (clock[k + 1] - clock[k]) * (levy.times[k + 1] - levy.times[k]);
        }
        const bool absorbed_here = levy.hit_zero_at && k == n - 1;
        out.times.push_back(s);
        out.values.push_back(absorbed_here ? 0.0 : levy.values[k]);
        out.progeny.push_back(c);
    }
    if (levy.hit_zero_at && !overflow) {
        out.hit_zero_at = clock[n - 1];
        // close the path at the absorption instant, where J equals the Levy absorption time
        if (opts.horizon <= 0.0 && (out.times.empty() || out.times.back() < clock[n - 1])) {
            out.times.push_back(clock[n - 1]);
            out.values.push_back(0.0);
            out.progeny.push_back(*levy.hit_zero_at);
        }
    }
    if (levy.killed_at && !overflow) out.killed_at = clock[last];
    if (levy.crossed_a_at) {
        const double ca = *levy.crossed_a_at;
        std::size_t m = 0;
        while (m + 1 <= last && levy.times[m + 1] <= ca) ++m;
        double s = clock[m];
        if (m < last && levy.times[m + 1] > levy.times[m]) {
            s += (ca - levy.times[m]) / (levy.times[m + 1] - levy.times[m]) * (clock[m + 1] - clock[m]);
        }
        if (m <= last) out.crossed_a_at = s;
    }
    for (const auto& jmp : levy.jumps) {
        if (jmp.time > levy.times[last]) break;
        std::size_t m = 0;
        while (m + 1 <= last && levy.times[m + 1] <= jmp.time) ++m;
        out.jumps.push_back({clock[m], jmp.size});
        out.max_jump = std::max(out.max_jump, jmp.size);
    }
    return out;
}

PathOutcome simulate_outcome(const BranchingMechanism& mech, const RefractionSpec& refraction, double x0,
                             const SimulationOptions& opts, std::mt19937_64& rng) {
    const Model m = resolve(mech, refraction);
    NullObserver obs;
    const EngineResult r = run_engine(m, x0, opts, rng, obs);
    PathOutcome o;
    o.crossed = r.crossed;
    o.crossed_at = r.crossed_at;
    o.max_jump = r.max_jump;
    switch (r.stop) {
    case Stop::Absorbed:
        o.absorbed = true;
        o.absorbed_at = r.t;
        break;
    case Stop::Killed:
        o.killed = true;
        o.killed_at = r.t;
        break;
    case Stop::Escaped: o.escaped = true; break;
    case Stop::Horizon: o.unresolved = true; break;
    case Stop::Crossed:
    case Stop::Observer:
    case Stop::None: break;
    }
    return o;
}

TestFunction TestFunction::exponential(double rate) {
    TestFunction t;
    t.f = [rate](double x) { return std::exp(-rate * x); };
    t.df = [rate](double x) { return -rate * std::exp(-rate * x); };
    t.d2f = [rate](double x) { return rate * rate * std::exp(-rate * x); };
    t.exp_rate = rate;
    return t;
}

double apply_generator(const TestFunction& f, const BranchingMechanism& mech, const RefractionSpec& refraction,
                       double x) {
    if (x == 0.0) return 0.0;
    const double ind = x <= refraction.b ? 1.0 : 0.0;
    if (f.exp_rate) {
        const double l = *f.exp_rate;
        return x * std::exp(-l * x) * (psi(mech, l) - refraction.delta * l * ind);
    }
    const double fx = f.f(x);
    const double dfx = f.df(x);
    double gamma_f = -mech.beta * fx + mech.drift() * dfx + 0.5 * mech.sigma2 * f.d2f(x);
    const JumpMeasure& j = mech.jumps;
    if (j.kind == JumpKind::Fixed) {
        gamma_f += j.rate * (f.f(x + j.size) - fx);
    } else if (j.kind == JumpKind::Exponential) {
        double err = 0.0;
        const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [&](double z) { return (f.f(x + z) - fx) * j.rate * j.mu * std::exp(-j.mu * z); }, 0.0, kInf, 15, 1e-12,
            &err);
        if (!std::isfinite(v) || err > 1e-8 * std::max(1.0, std::abs(v))) {
            throw QuadratureFailure("apply_generator: jump integral did not converge");
        }
        gamma_f += v;
    }
    return x * (gamma_f + refraction.delta * ind * dfx);
}

namespace {

// Tracks i = int ds / U and the compensator on the Levy clock, and samples
// N at the branching times of t_grid.
struct MartingaleObserver {
    const std::vector<double>* grid;
    double beta;
    double lambda;
    double g_below;  // psi(lambda) - delta lambda
    double g_above;  // psi(lambda)
    double b;
    double* out;     // one slot per grid point
    std::size_t next = 0;
    double clock = 0.0;
    double integral = 0.0;

    double integrand(double s, double u) const {
        return std::exp(-beta * s) * std::exp(-lambda * u) * (u <= b ? g_below : g_above);
    }
    void segment(double t0, double u0, double t1, double u1, bool terminal) {
        const double h = t1 - t0;
        const double di = terminal ? h / u0 : 0.5 * h * (1.0 / u0 + 1.0 / u1);
        const double a0 = integrand(t0, u0);
        const double a1 = terminal ? a0 : integrand(t1, u1);
        const double dI = terminal ? h * a0 : 0.5 * h * (a0 + a1);
        const double i1 = clock + di;
        while (next < grid->size() && (*grid)[next] <= i1) {
            const double w = di > 0.0 ? ((*grid)[next] - clock) / di : 1.0;
            const double s = t0 + w * h;
            const double u = terminal ? u0 : u0 + w * (u1 - u0);
            out[next] = std::exp(-beta * s) * std::exp(-lambda * u) - (integral + w * dI);
            ++next;
        }
        clock = i1;
        integral += dI;
        if (terminal) {
            // absorbed: V stays at 0 and J is frozen at t1
            while (next < grid->size()) {
                out[next] = std::exp(-beta * t1) - integral;
                ++next;
            }
        }
    }
    void jump(double, double, double) {}
    bool done() const { return next >= grid->size(); }
};

} // namespace

MartingaleReport martingale_check(const TestFunction& f, const BranchingMechanism& mech,
                                  const RefractionSpec& refraction, double x0, const std::vector<double>& t_grid,
                                  std::size_t paths, std::uint64_t seed, double dt) {
    if (!f.exp_rate) throw DomainError("martingale_check needs an exponential test function");
    if (paths == 0) throw DomainError("martingale_check needs at least one path");
    if (!std::is_sorted(t_grid.begin(), t_grid.end()) || (!t_grid.empty() && t_grid.front() < 0.0)) {
        throw DomainError("martingale_check needs a sorted nonnegative time grid");
    }
    const Model m = resolve(mech, refraction);
    const double l = *f.exp_rate;
    const double g_above = psi(mech, l);
    const double g_below = g_above - refraction.delta * l;
    const std::size_t k = t_grid.size();

    SimulationOptions opts;
    opts.dt = dt;
    opts.horizon = 1e4;
    opts.kill = false;
    std::vector<double> values(paths * k, 0.0);
    parallel_for(paths, [&](std::size_t p) {
        auto rng = path_rng(seed, p);
        MartingaleObserver obs{&t_grid, m.beta, l, g_below, g_above, m.b, values.data() + p * k};
        while (obs.next < k && t_grid[obs.next] == 0.0) obs.out[obs.next++] = f.f(x0);
        const EngineResult r = run_engine(m, x0, opts, rng, obs);
        // Levy horizon reached first: freeze at the last state.
        while (obs.next < k) {
            obs.out[obs.next++] = std::exp(-m.beta * r.t) * std::exp(-l * r.u) - obs.integral;
        }
    });

    MartingaleReport rep;
    rep.t = t_grid;
    rep.f_x0 = f.f(x0);
    rep.n_paths = paths;
    for (std::size_t j = 0; j < k; ++j) {
        // shifted by the first path so that identical samples give SE = 0 exactly
        const double shift = values[j];
        double sum = 0.0;
        for (std::size_t p = 0; p < paths; ++p) sum += values[p * k + j] - shift;
        const double dmean = sum / static_cast<double>(paths);
        const double mean = shift + dmean;
        double ss = 0.0;
        for (std::size_t p = 0; p < paths; ++p) {
            const double d = values[p * k + j] - shift - dmean;
            ss += d * d;
        }
        const double se = paths > 1 ? std::sqrt(ss / static_cast<double>(paths - 1) / static_cast<double>(paths)) : 0.0;
        rep.mean.push_back(mean);
        rep.std_error.push_back(se);
        if (se > 0.0) rep.flatness = std::max(rep.flatness, std::abs(mean - rep.f_x0) / se);
    }
    return rep;
}

} // namespace rcsbp
