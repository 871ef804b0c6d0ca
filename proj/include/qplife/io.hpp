#pragma once

// CSV tables, JSON run sidecars and flat config files.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace qplife::io {

inline constexpr const char* kSchemaVersion = "qplife.run/1";

std::string version_string();

/// 17 significant digits, '.' decimal, no grouping.
std::string format_double(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const Table& table);
Table read_csv(const std::filesystem::path& path);

/// Sidecar written next to `csv_path` as <csv_path>.json.
nlohmann::json make_metadata(const std::string& command, const nlohmann::json& config,
                             double wall_seconds);
void write_metadata(const std::filesystem::path& csv_path, const nlohmann::json& meta);
/// Throws InvalidInput naming the first missing or mistyped field.
void validate_metadata(const nlohmann::json& meta);

/// Flat key=value text ('#' comments) or a flat JSON object. Keys may use
/// '-' or '_' interchangeably; values are kept as strings.
using ConfigMap = std::map<std::string, std::string>;
ConfigMap parse_config(const std::string& text);
ConfigMap load_config(const std::filesystem::path& path);

}  // namespace qplife::io
