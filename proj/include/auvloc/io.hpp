#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "auvloc/sim.hpp"
#include "json.hpp"

namespace auvloc {

inline constexpr std::string_view kToolName = "auvloc";
inline constexpr std::string_view kToolVersion = "0.3.0";

enum class OutputFormat { Csv, Json };

struct ParsedConfig {
  ScenarioConfig config;
  std::vector<std::string> defaults_applied;  // field names that were defaulted
};

/// Accepts a scenario document or a manifest.json emitted by
/// write_run_record (its "config" member is used).
ParsedConfig parse_config_text(std::string_view text);
ScenarioConfig parse_config(const std::filesystem::path& path);

/// Fully resolved config; parse_config_text(config_to_json(c).dump()) == c.
nlohmann::json config_to_json(const ScenarioConfig& cfg);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

/// Writes trajectory.{csv,json}, metrics.{csv,json} and manifest.json into
/// `dir` (created if missing). Returns the written paths.
std::vector<std::filesystem::path> write_run_record(const RunRecord& record,
                                                    const ScenarioConfig& cfg,
                                                    std::string_view subcommand,
                                                    const std::filesystem::path& dir,
                                                    OutputFormat format);

/// Reads a metrics.csv or metrics.json back (format from the extension).
Metrics read_metrics(const std::filesystem::path& path);

}  // namespace auvloc
