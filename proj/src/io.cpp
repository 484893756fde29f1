#include "rcsbp/io.hpp"

#include "rcsbp/errors.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace rcsbp {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

json scale_metadata(const ScaleGrid& grid) {
    const auto& m = grid.meta();
    json j = {{"q", m.q},
              {"killing", m.killing},
              {"exponent", to_string(m.exponent)},
              {"delta", m.delta},
              {"method", to_string(m.method)},
              {"right_root", m.right_root},
              {"x_max", grid.x_max()},
              {"n", grid.n()}};
    j["truncation"] = std::isinf(m.truncation) ? json(nullptr) : json(m.truncation);
    return j;
}

void write_scale_csv(std::ostream& out, const ScaleGrid& grid, const json& meta) {
    out << "# " << meta.dump() << "\n";
    out << "x,W,Wprime,Z\n";
    for (int i = 0; i <= grid.n(); ++i) {
        out << format_number(grid.x(i)) << ',' << format_number(grid.w()[i]) << ','
            << format_number(grid.w_prime()[i]) << ',' << format_number(grid.z()[i]) << '\n';
    }
}

void write_path_csv(std::ostream& out, const PathSample& path, const json& meta) {
    out << "# " << meta.dump() << "\n";
    out << "t,value,clock\n";
    const std::string clock = to_string(path.clock);
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        out << format_number(path.times[i]) << ',' << format_number(path.values[i]) << ',' << clock << '\n';
    }
}

json result_record(const json& value, const std::string& method, const std::vector<std::string>& warnings,
                   const json& config) {
    return {{"value", value}, {"method", method}, {"warnings", warnings}, {"config", config}};
}

std::string write_output_file(const std::string& dir, const std::string& name, const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path p = fs::path(dir) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write output file '" + p.string() + "'");
    f << content;
    return p.string();
}

} // namespace rcsbp
