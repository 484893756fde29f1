#include "rcsbp/cli.hpp"

#include "rcsbp/config.hpp"
#include "rcsbp/errors.hpp"
#include "rcsbp/estimate.hpp"
#include "rcsbp/functionals.hpp"
#include "rcsbp/io.hpp"
#include "rcsbp/pathsim.hpp"
#include "rcsbp/scale.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace rcsbp {

using nlohmann::json;

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<double> dt;
    std::optional<std::string> out_dir;
    std::optional<double> x, a, q, y, t;
    std::optional<double> delta, b, beta, gamma, sigma2;
    std::string exponent = "plain";
    std::string direction = "down";
    std::string method = "auto";
};

RunConfig resolve_config(const Options& o) {
    RunConfig c = o.config_path.empty() ? RunConfig::defaults() : load_config(o.config_path);
    if (o.seed) c.simulation.seed = *o.seed;
    if (o.paths) c.simulation.n_paths = *o.paths;
    if (o.dt) c.simulation.dt = *o.dt;
    if (o.out_dir) c.outputs.dir = *o.out_dir;
    if (o.delta) c.refraction.delta = *o.delta;
    if (o.b) c.refraction.b = *o.b;
    if (o.beta) c.mechanism.beta = *o.beta;
    if (o.gamma) c.mechanism.gamma = *o.gamma;
    if (o.sigma2) c.mechanism.sigma2 = *o.sigma2;
    c.validate();
    return c;
}

bool wants(const RunConfig& c, const std::string& format) {
    for (const auto& f : c.outputs.formats) {
        if (f == format) return true;
    }
    return false;
}

// Prints the record and stores it as <name>.json when JSON output is enabled.
void emit(const RunConfig& c, const std::string& name, const json& record, std::ostream& out) {
    const std::string text = record.dump(2) + "\n";
    out << text;
    if (wants(c, "json")) write_output_file(c.outputs.dir, name + ".json", text);
}

json query_json(const Options& o, const RunConfig& c) {
    json q = json::object();
    q["x"] = o.x.value_or(c.x0);
    if (o.a) q["a"] = *o.a;
    if (o.q) q["q"] = *o.q;
    if (o.y) q["y"] = *o.y;
    if (o.t) q["t"] = *o.t;
    return q;
}

json full_config(const std::string& command, const Options& o, const RunConfig& c) {
    json j = to_json(c);
    j["command"] = command;
    j["query"] = query_json(o, c);
    return j;
}

LaplaceExponent exponent_by_name(const std::string& name, const RunConfig& c, double y) {
    if (name == "plain") return plain_exponent(c.mechanism);
    if (name == "refracted") return refracted_exponent(c.mechanism, c.refraction.delta);
    if (name == "truncated") return truncated_exponent(c.mechanism, y);
    if (name == "truncated-refracted") return truncated_refracted_exponent(c.mechanism, y, c.refraction.delta);
    throw ConfigError("--exponent must be plain, refracted, truncated or truncated-refracted");
}

std::optional<ScaleMethod> method_by_name(const std::string& name) {
    if (name == "auto") return std::nullopt;
    if (name == "quadratic") return ScaleMethod::ClosedFormQuadratic;
    if (name == "cramer-lundberg") return ScaleMethod::ClosedFormCramerLundberg;
    if (name == "inversion") return ScaleMethod::LaplaceInversion;
    throw ConfigError("--method must be auto, quadratic, cramer-lundberg or inversion");
}

json functional_record(const FunctionalResult& r, const json& config) {
    return result_record(r.value, r.method, r.warnings, config);
}

int cmd_scale_eval(const Options& o, const RunConfig& c, std::ostream& out) {
    const double q = o.q.value_or(0.0);
    const double x = o.x.value_or(c.x0);
    const LaplaceExponent e = exponent_by_name(o.exponent, c, o.y.value_or(1.0));
    const ScaleGrid grid = build_scale_grid(e, q, c.grid(), c.inversion(), method_by_name(o.method));
    const json config = full_config("scale-eval", o, c);
    if (wants(c, "csv")) {
        json meta = scale_metadata(grid);
        meta["config"] = config;
        std::ostringstream csv;
        write_scale_csv(csv, grid, meta);
        write_output_file(c.outputs.dir, "scale.csv", csv.str());
    }
    const json value = {{"W", grid.W(x)}, {"Wprime", grid.Wprime(x)}, {"Z", grid.Z(x)}};
    emit(c, "scale-eval", result_record(value, to_string(grid.method()), {}, config), out);
    return kExitOk;
}

int cmd_exit(const Options& o, const RunConfig& c, std::ostream& out) {
    ExitQuery query{o.x.value_or(c.x0), o.a.value_or(2.0), o.q.value_or(0.0)};
    FunctionalResult r;
    if (o.direction == "down") {
        r = exit_down_transform(query, c.mechanism, c.refraction, c.functional_options());
    } else if (o.direction == "up") {
        r = exit_up_transform(query, c.mechanism, c.refraction, c.functional_options());
    } else {
        throw ConfigError("--direction must be down or up");
    }
    emit(c, "exit", functional_record(r, full_config("exit", o, c)), out);
    return kExitOk;
}

int cmd_diffusion_ext(const Options& o, const RunConfig& c, std::ostream& out) {
    if (!c.mechanism.jumps.empty() || c.mechanism.beta != 0.0) {
        throw ConfigError("diffusion-ext needs a Brownian mechanism without jumps or killing");
    }
    const double v = diffusion_extinction(o.x.value_or(c.x0), c.mechanism.gamma, c.mechanism.sigma2,
                                          c.refraction.delta, c.refraction.b);
    emit(c, "diffusion-ext", result_record(v, "closed_form", {}, full_config("diffusion-ext", o, c)), out);
    return kExitOk;
}

int cmd_explosion(const Options& o, const RunConfig& c, std::ostream& out) {
    const ExplosionReport r = classify_explosion(c.mechanism, c.refraction);
    const json value = {{"jumps_to_infinity", r.jumps_to_infinity},
                        {"ogura_grey_plain", to_string(r.ogura_grey_plain)},
                        {"ogura_grey_delta", to_string(r.ogura_grey_delta)}};
    emit(c, "explosion", result_record(value, "ogura_grey_numeric", {}, full_config("explosion", o, c)), out);
    return kExitOk;
}

int cmd_simulate(const Options& o, const RunConfig& c, std::ostream& out) {
    SimulationOptions sim;
    sim.dt = c.simulation.dt;
    sim.horizon = c.simulation.horizon;
    sim.eps0 = c.simulation.eps0;
    if (o.a) sim.upper_level = *o.a;
    auto rng = path_rng(c.simulation.seed, 0);
    const PathSample levy = simulate_refracted(c.mechanism, c.refraction, c.x0, sim, rng);
    const PathSample branching = lamperti_transform(levy, c.x0);
    const json config = full_config("simulate", o, c);

    if (wants(c, "csv")) {
        json meta = {{"path_index", 0}, {"config", config}};
        std::ostringstream a;
        meta["clock"] = "levy";
        write_path_csv(a, levy, meta);
        write_output_file(c.outputs.dir, "levy_path.csv", a.str());
        std::ostringstream b;
        meta["clock"] = "branching";
        write_path_csv(b, branching, meta);
        write_output_file(c.outputs.dir, "branching_path.csv", b.str());
    }

    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json value = {{"path0",
                   {{"hit_zero_at_levy", opt(levy.hit_zero_at)},
                    {"hit_zero_at_branching", opt(branching.hit_zero_at)},
                    {"killed_at", opt(levy.killed_at)},
                    {"crossed_a_at", opt(levy.crossed_a_at)},
                    {"total_progeny", levy.hit_zero_at ? json(*levy.hit_zero_at) : json(nullptr)},
                    {"max_jump", levy.max_jump},
                    {"n_jumps", levy.jumps.size()},
                    {"clock_overflow", branching.clock_overflow}}}};
    if (c.simulation.n_paths > 1) {
        const Ensemble ens = simulate_ensemble(c.mechanism, c.refraction, c.x0, kInf, false, c.mc());
        std::size_t absorbed = 0, killed = 0, escaped = 0, unresolved = 0;
        for (const auto& p : ens.outcomes) {
            absorbed += p.absorbed;
            killed += p.killed;
            escaped += p.escaped;
            unresolved += p.unresolved;
        }
        const double n = static_cast<double>(ens.outcomes.size());
        const MCEstimate v = estimate_from_ensemble(FunctionalSpec::vanish(), ens);
        value["ensemble"] = {{"n_paths", ens.outcomes.size()},
                             {"absorbed", absorbed / n},
                             {"killed", killed / n},
                             {"escaped", escaped / n},
                             {"unresolved", unresolved / n},
                             {"escape_level", std::isinf(ens.escape_level) ? json(nullptr) : json(ens.escape_level)},
                             {"vanish", {{"value", v.value}, {"std_error", v.std_error},
                                         {"horizon_bias_bound", v.horizon_bias_bound}}}};
    }
    emit(c, "simulate", result_record(value, "euler_lamperti", {}, config), out);
    return kExitOk;
}

// Built-in verification matrix.
struct VerifyModel {
    std::string name;
    BranchingMechanism mech;
    RefractionSpec refraction;
    double x;
    double a;
    std::vector<double> down_q;  ///< q values checked for the exit-down transform
    std::vector<double> up_q;
};

std::vector<VerifyModel> verify_models() {
    BranchingMechanism quad;
    quad.gamma = 1.0;
    quad.sigma2 = 1.0;
    BranchingMechanism bexp = quad;
    bexp.jumps = JumpMeasure::exponential(1.0, 0.5);
    BranchingMechanism bv;
    bv.gamma = -1.5;
    bv.jumps = JumpMeasure::exponential(3.0, 1.0);
    BranchingMechanism killed = quad;
    killed.beta = 0.3;
    const RefractionSpec r{0.5, 1.0};
    return {{"quadratic", quad, r, 0.5, 2.0, {0.0, 0.3}, {0.0, 0.3}},
            {"brownian_exp", bexp, r, 0.5, 2.0, {0.0}, {0.3}},
            {"bv_exp", bv, r, 0.5, 2.0, {0.0}, {}},
            {"killed_quadratic", killed, r, 0.5, 2.0, {}, {0.0}}};
}

struct VerifyRow {
    std::string quantity;
    std::string params;
    AgreementReport report;
};

std::string params_string(const VerifyModel& m, const std::string& extra) {
    std::string s = "model=" + m.name + ";x=" + format_number(m.x) + ";b=" + format_number(m.refraction.b) +
                    ";delta=" + format_number(m.refraction.delta);
    if (!extra.empty()) s += ";" + extra;
    return s;
}

int cmd_verify(const Options& o, const RunConfig& c, std::ostream& out, std::ostream& err) {
    const FunctionalOptions fo = c.functional_options();
    const MCConfig base = c.mc();
    std::vector<VerifyRow> rows;
    std::uint64_t ensemble_index = 0;
    auto next_config = [&] {
        MCConfig m = base;
        m.seed = base.seed + ensemble_index++;
        return m;
    };

    for (const VerifyModel& m : verify_models()) {
        const Ensemble two = simulate_ensemble(m.mech, m.refraction, m.x, m.a, true, next_config());
        const Ensemble inf = simulate_ensemble(m.mech, m.refraction, m.x, kInf, false, next_config());
        auto add = [&](const std::string& quantity, const std::string& extra, double formula, const MCEstimate& mc) {
            rows.push_back({quantity, params_string(m, extra), agreement_report(formula, mc)});
        };
        const std::string a_str = "a=" + format_number(m.a);

        std::vector<double> qs = m.down_q;
        qs.insert(qs.end(), m.up_q.begin(), m.up_q.end());
        std::sort(qs.begin(), qs.end());
        qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
        auto has = [](const std::vector<double>& v, double q) { return std::find(v.begin(), v.end(), q) != v.end(); };
        for (double q : qs) {
            const ExitQuery query{m.x, m.a, q};
            const std::string extra = a_str + ";q=" + format_number(q);
            if (has(m.down_q, q)) {
                add("exit_down", extra, exit_down_transform(query, m.mech, m.refraction, fo).value,
                    estimate_from_ensemble(FunctionalSpec::exit_down(q, m.a), two));
            }
            if (has(m.up_q, q)) {
                add("exit_up", extra, exit_up_transform(query, m.mech, m.refraction, fo).value,
                    estimate_from_ensemble(FunctionalSpec::exit_up(q, m.a), two));
            }
        }

        const MCEstimate vanish_mc = estimate_from_ensemble(FunctionalSpec::vanish(), inf);
        add("vanish", "", vanish_probability(m.x, m.mech, m.refraction, fo).value, vanish_mc);
        if (m.name == "quadratic") {
            add("extinction_transform", "q=0.3", extinction_transform(m.x, 0.3, m.mech, m.refraction, fo).value,
                estimate_from_ensemble(FunctionalSpec::extinction_transform(0.3), inf));
            add("diffusion_extinction", "",
                diffusion_extinction(m.x, m.mech.gamma, m.mech.sigma2, m.refraction.delta, m.refraction.b),
                vanish_mc);
        }
        if (!m.mech.jumps.empty()) {
            add("max_jump_cdf", "y=1", max_jump_cdf(m.x, 1.0, m.mech, m.refraction, fo).value,
                estimate_from_ensemble(FunctionalSpec::max_jump_cdf(1.0), inf));
        }
    }

    const json config = full_config("verify", o, c);
    std::ostringstream csv;
    csv << "# " << json({{"config", config}}).dump() << "\n";
    csv << "quantity,params,formula,mc,se,verdict\n";
    bool any_fail = false;
    json records = json::array();
    for (const auto& r : rows) {
        csv << r.quantity << ',' << r.params << ',' << format_number(r.report.formula) << ','
            << format_number(r.report.mc.value) << ',' << format_number(r.report.mc.std_error) << ','
            << to_string(r.report.verdict) << '\n';
        any_fail = any_fail || r.report.verdict == Verdict::Fail;
        records.push_back({{"quantity", r.quantity},
                           {"params", r.params},
                           {"formula", r.report.formula},
                           {"mc", r.report.mc.value},
                           {"se", r.report.mc.std_error},
                           {"horizon_bias_bound", r.report.mc.horizon_bias_bound},
                           {"n_paths", r.report.mc.n_paths},
                           {"seed", r.report.mc.seed},
                           {"verdict", to_string(r.report.verdict)}});
    }
    const std::string path = write_output_file(c.outputs.dir, "verify_summary.csv", csv.str());
    emit(c, "verify", result_record(records, "formula_vs_monte_carlo", {}, config), out);
    if (any_fail) {
        err << "verify: at least one FAIL verdict (see " << path << ")\n";
        return kExitFail;
    }
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Numerical toolkit for refracted continuous-state branching processes", "rcsbp"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config_path, "JSON run configuration");
    app.add_option("--seed", o.seed, "override simulation.seed");
    app.add_option("--paths", o.paths, "override simulation.n_paths");
    app.add_option("--dt", o.dt, "override simulation.dt");
    app.add_option("--out", o.out_dir, "override outputs.dir");
    app.add_option("--x", o.x, "starting population (default x0)");
    app.add_option("--a", o.a, "upper level");
    app.add_option("--q", o.q, "transform parameter");
    app.add_option("--y", o.y, "jump-size level");
    app.add_option("--t", o.t, "time argument of lil-alpha");
    app.add_option("--delta", o.delta, "override refraction.delta");
    app.add_option("--b", o.b, "override refraction.b");
    app.add_option("--beta", o.beta, "override mechanism.beta");
    app.add_option("--gamma", o.gamma, "override mechanism.gamma");
    app.add_option("--sigma2", o.sigma2, "override mechanism.sigma2");
    app.add_option("--exponent", o.exponent, "scale-eval: plain|refracted|truncated|truncated-refracted");
    app.add_option("--direction", o.direction, "exit: down|up");
    app.add_option("--method", o.method, "scale-eval: auto|quadratic|cramer-lundberg|inversion");

    const std::vector<std::pair<const char*, const char*>> commands = {
        {"scale-eval", "tabulate W, W' and Z of an exponent"},
        {"exit", "two-sided exit transform"},
        {"extinction", "Laplace transform of the total progeny on extinction"},
        {"vanish", "probability that the population vanishes"},
        {"sup-below", "probability that the population stays below a"},
        {"diffusion-ext", "extinction probability of the refracted Feller diffusion"},
        {"explosion", "killing and Ogura-Grey classification"},
        {"max-jump", "distribution function of the largest jump before absorption"},
        {"lil-alpha", "rate function alpha(t)"},
        {"simulate", "simulate paths and dump the first one"},
        {"verify", "formula versus Monte Carlo agreement suite"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const RunConfig c = resolve_config(o);
        const FunctionalOptions fo = c.functional_options();
        const double x = o.x.value_or(c.x0);
        if (command == "scale-eval") return cmd_scale_eval(o, c, out);
        if (command == "exit") return cmd_exit(o, c, out);
        if (command == "extinction") {
            const auto r = extinction_transform(x, o.q.value_or(0.0), c.mechanism, c.refraction, fo);
            emit(c, command, functional_record(r, full_config(command, o, c)), out);
            return kExitOk;
        }
        if (command == "vanish") {
            const auto r = vanish_probability(x, c.mechanism, c.refraction, fo);
            emit(c, command, functional_record(r, full_config(command, o, c)), out);
            return kExitOk;
        }
        if (command == "sup-below") {
            const auto r = sup_below_probability(x, o.a.value_or(2.0), c.mechanism, c.refraction, fo);
            emit(c, command, functional_record(r, full_config(command, o, c)), out);
            return kExitOk;
        }
        if (command == "diffusion-ext") return cmd_diffusion_ext(o, c, out);
        if (command == "explosion") return cmd_explosion(o, c, out);
        if (command == "max-jump") {
            const auto r = max_jump_cdf(x, o.y.value_or(1.0), c.mechanism, c.refraction, fo);
            emit(c, command, functional_record(r, full_config(command, o, c)), out);
            return kExitOk;
        }
        if (command == "lil-alpha") {
            const double t = o.t.value_or(std::exp(-std::exp(1.0)));
            const double v = lil_alpha(t, c.mechanism);
            emit(c, command, result_record(v, "right_inverse", {}, full_config(command, o, c)), out);
            return kExitOk;
        }
        if (command == "simulate") return cmd_simulate(o, c, out);
        if (command == "verify") return cmd_verify(o, c, out, err);
        err << "unknown command " << command << "\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "invalid argument: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace rcsbp
