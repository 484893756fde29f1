#include "rcsbp/config.hpp"

#include "rcsbp/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace rcsbp {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown field '" + key + "' in " + where);
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("field '") + key + "' in " + where + " has the wrong type");
    }
}

} // namespace

RunConfig RunConfig::defaults() {
    RunConfig c;
    c.mechanism.gamma = 1.0;
    c.mechanism.sigma2 = 1.0;
    c.refraction = {0.5, 1.0};
    return c;
}

MCConfig RunConfig::mc() const {
    MCConfig m;
    m.dt = simulation.dt;
    m.horizon = simulation.horizon;
    m.eps0 = simulation.eps0;
    m.n_paths = simulation.n_paths;
    m.seed = simulation.seed;
    return m;
}

FunctionalOptions RunConfig::functional_options() const {
    FunctionalOptions o;
    o.n = scale.n;
    o.inversion = inversion();
    return o;
}

GridSpec RunConfig::grid() const { return {scale.x_max, scale.n}; }

InversionOptions RunConfig::inversion() const { return {scale.inversion_terms, scale.precision}; }

void RunConfig::validate() const {
    validate_model(mechanism, refraction);
    if (!(x0 > 0.0)) throw ConfigError("x0 must be > 0");
    if (!(simulation.dt > 0.0)) throw ConfigError("simulation.dt must be > 0");
    if (!(simulation.horizon > 0.0)) throw ConfigError("simulation.horizon must be > 0");
    if (simulation.n_paths == 0) throw ConfigError("simulation.n_paths must be > 0");
    if (!(simulation.eps0 > 0.0)) throw ConfigError("simulation.eps0 must be > 0");
    if (!(scale.x_max > 0.0)) throw ConfigError("scale.x_max must be > 0");
    if (scale.n < 4) throw ConfigError("scale.n must be >= 4");
    if (scale.inversion_terms < 2) throw ConfigError("scale.inversion_terms must be >= 2");
    if (!(scale.precision > 0.0)) throw ConfigError("scale.precision must be > 0");
    for (const auto& f : outputs.formats) {
        if (f != "json" && f != "csv") throw ConfigError("outputs.formats accepts only 'json' and 'csv'");
    }
}

json mechanism_to_json(const BranchingMechanism& mech) {
    json jumps;
    switch (mech.jumps.kind) {
    case JumpKind::None: jumps = {{"kind", "none"}}; break;
    case JumpKind::Exponential:
        jumps = {{"kind", "exp"}, {"rate", mech.jumps.rate}, {"mean", mech.jumps.mean_size()}};
        break;
    case JumpKind::Fixed: jumps = {{"kind", "fixed"}, {"rate", mech.jumps.rate}, {"size", mech.jumps.size}}; break;
    }
    return {{"beta", mech.beta}, {"gamma", mech.gamma}, {"sigma2", mech.sigma2}, {"jumps", jumps}};
}

BranchingMechanism mechanism_from_json(const json& j) {
    reject_unknown(j, {"beta", "gamma", "sigma2", "jumps"}, "mechanism");
    BranchingMechanism m;
    read(j, "beta", m.beta, "mechanism");
    read(j, "gamma", m.gamma, "mechanism");
    read(j, "sigma2", m.sigma2, "mechanism");
    if (j.contains("jumps")) {
        const json& jj = j.at("jumps");
        reject_unknown(jj, {"kind", "rate", "mean", "size"}, "mechanism.jumps");
        std::string kind = "none";
        double rate = 0.0;
        double mean = 0.0;
        double size = 0.0;
        read(jj, "kind", kind, "mechanism.jumps");
        read(jj, "rate", rate, "mechanism.jumps");
        read(jj, "mean", mean, "mechanism.jumps");
        read(jj, "size", size, "mechanism.jumps");
        if (kind == "none") {
            m.jumps = JumpMeasure::none();
        } else if (kind == "exp") {
            if (!(rate > 0.0) || !(mean > 0.0)) throw ConfigError("exp jumps need rate > 0 and mean > 0");
            m.jumps = JumpMeasure::exponential(rate, mean);
        } else if (kind == "fixed") {
            if (!(rate > 0.0) || !(size > 0.0)) throw ConfigError("fixed jumps need rate > 0 and size > 0");
            m.jumps = JumpMeasure::fixed(rate, size);
        } else {
            throw ConfigError("jump kind must be none, exp or fixed (got '" + kind + "')");
        }
    }
    return m;
}

json to_json(const RunConfig& c) {
    return {{"mechanism", mechanism_to_json(c.mechanism)},
            {"refraction", {{"delta", c.refraction.delta}, {"b", c.refraction.b}}},
            {"x0", c.x0},
            {"simulation",
             {{"dt", c.simulation.dt},
              {"horizon", c.simulation.horizon},
              {"n_paths", c.simulation.n_paths},
              {"seed", c.simulation.seed},
              {"eps0", c.simulation.eps0}}},
            {"scale",
             {{"x_max", c.scale.x_max},
              {"n", c.scale.n},
              {"inversion_terms", c.scale.inversion_terms},
              {"precision", c.scale.precision}}},
            {"outputs", {{"dir", c.outputs.dir}, {"formats", c.outputs.formats}}}};
}

RunConfig config_from_json(const json& j) {
    reject_unknown(j, {"mechanism", "refraction", "x0", "simulation", "scale", "outputs"}, "config");
    RunConfig c = RunConfig::defaults();
    if (j.contains("mechanism")) c.mechanism = mechanism_from_json(j.at("mechanism"));
    if (j.contains("refraction")) {
        const json& r = j.at("refraction");
        reject_unknown(r, {"delta", "b"}, "refraction");
        read(r, "delta", c.refraction.delta, "refraction");
        read(r, "b", c.refraction.b, "refraction");
    }
    read(j, "x0", c.x0, "config");
    if (j.contains("simulation")) {
        const json& s = j.at("simulation");
        reject_unknown(s, {"dt", "horizon", "n_paths", "seed", "eps0"}, "simulation");
        read(s, "dt", c.simulation.dt, "simulation");
        read(s, "horizon", c.simulation.horizon, "simulation");
        read(s, "n_paths", c.simulation.n_paths, "simulation");
        read(s, "seed", c.simulation.seed, "simulation");
        read(s, "eps0", c.simulation.eps0, "simulation");
    }
    if (j.contains("scale")) {
        const json& s = j.at("scale");
        reject_unknown(s, {"x_max", "n", "inversion_terms", "precision"}, "scale");
        read(s, "x_max", c.scale.x_max, "scale");
        read(s, "n", c.scale.n, "scale");
        read(s, "inversion_terms", c.scale.inversion_terms, "scale");
        read(s, "precision", c.scale.precision, "scale");
    }
    if (j.contains("outputs")) {
        const json& o = j.at("outputs");
        reject_unknown(o, {"dir", "formats"}, "outputs");
        read(o, "dir", c.outputs.dir, "outputs");
        read(o, "formats", c.outputs.formats, "outputs");
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

} // namespace rcsbp
