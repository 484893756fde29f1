#pragma once

#include "rcsbp/estimate.hpp"
#include "rcsbp/functionals.hpp"
#include "rcsbp/mechanism.hpp"
#include "rcsbp/scale.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace rcsbp {

struct SimulationConfig {
    double dt = 1e-3;
    double horizon = 200.0;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
    double eps0 = 1e-9;
};

struct ScaleConfig {
    double x_max = 5.0;
    int n = 4096;
    int inversion_terms = 15;
    double precision = 10.0;
};

struct OutputConfig {
    std::string dir = ".";
    std::vector<std::string> formats{"json", "csv"};
};

struct RunConfig {
    BranchingMechanism mechanism;
    RefractionSpec refraction;
    double x0 = 0.5;
    SimulationConfig simulation;
    ScaleConfig scale;
    OutputConfig outputs;

    /// Quadratic model gamma = 1, sigma2 = 1, delta = 0.5, b = 1.
    static RunConfig defaults();

    MCConfig mc() const;
    FunctionalOptions functional_options() const;
    GridSpec grid() const;
    InversionOptions inversion() const;

    /// Throws ConfigError on invalid parameters, including a failed (H-bar).
    void validate() const;
};

nlohmann::json mechanism_to_json(const BranchingMechanism& mech);
BranchingMechanism mechanism_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& cfg);
/// Missing fields take their defaults; unknown fields are rejected.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

} // namespace rcsbp
