#pragma once

#include "rcsbp/pathsim.hpp"
#include "rcsbp/scale.hpp"

#include <json.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace rcsbp {

/// Shortest decimal form that reads back to the same double.
std::string format_number(double v);

nlohmann::json scale_metadata(const ScaleGrid& grid);

/// "# {json}" header line, then columns x, W, Wprime, Z.
void write_scale_csv(std::ostream& out, const ScaleGrid& grid, const nlohmann::json& meta);

/// "# {json}" header line, then columns t, value, clock.
void write_path_csv(std::ostream& out, const PathSample& path, const nlohmann::json& meta);

/// {"value": ..., "method": ..., "warnings": [...], "config": ...}
nlohmann::json result_record(const nlohmann::json& value, const std::string& method,
                             const std::vector<std::string>& warnings, const nlohmann::json& config);

/// Writes `content` to dir/name, creating dir when needed; returns the path.
std::string write_output_file(const std::string& dir, const std::string& name, const std::string& content);

} // namespace rcsbp
