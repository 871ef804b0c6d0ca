#include "qplife/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "qplife/error.hpp"

namespace qplife::io {

std::string version_string() {
#ifdef QPLIFE_VERSION
  return std::string("qplife ") + QPLIFE_VERSION;
#else
  return "qplife unknown";
#endif
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw InvalidInput("format_double: conversion failed");
  return std::string(buf, end);
}

std::size_t Table::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InvalidInput("table: no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> Table::values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r.at(c));
  return v;
}

void write_csv(const std::filesystem::path& path, const Table& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& r : table.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_double(r[i]);
    out << '\n';
  }
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  return out;
}

std::string normalize_key(std::string k) {
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

}  // namespace

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path.string());
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (t.header.empty()) {
      t.header = split(line, ',');
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : split(line, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidInput("csv " + path.string() + ": non-numeric cell '" + cell + "'");
      }
    }
    if (row.size() != t.header.size())
      throw InvalidInput("csv " + path.string() + ": ragged row");
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw InvalidInput("csv " + path.string() + ": empty file");
  return t;
}

nlohmann::json make_metadata(const std::string& command, const nlohmann::json& config,
                             double wall_seconds) {
  return {{"schema_version", kSchemaVersion},
          {"version", version_string()},
          {"command", command},
          {"config", config},
          {"wall_seconds", wall_seconds}};
}

void write_metadata(const std::filesystem::path& csv_path, const nlohmann::json& meta) {
  validate_metadata(meta);
  auto p = csv_path;
  p += ".json";
  std::ofstream out(p);
  if (!out) throw InvalidInput("cannot write " + p.string());
  out << meta.dump(2) << '\n';
}

void validate_metadata(const nlohmann::json& meta) {
  auto need = [&](const char* key, auto pred, const char* what) {
    if (!meta.contains(key) || !pred(meta.at(key)))
      throw InvalidInput(std::string("metadata: field '") + key + "' missing or not " + what);
  };
  if (!meta.is_object()) throw InvalidInput("metadata: not an object");
  need("schema_version", [](const auto& v) { return v.is_string() && v == kSchemaVersion; },
       kSchemaVersion);
  need("version", [](const auto& v) { return v.is_string(); }, "a string");
  need("command", [](const auto& v) { return v.is_string(); }, "a string");
  need("config", [](const auto& v) { return v.is_object(); }, "an object");
  need("wall_seconds", [](const auto& v) { return v.is_number() && v >= 0; },
       "a non-negative number");
}

ConfigMap parse_config(const std::string& text) {
  ConfigMap out;
  const std::string body = trim(text);
  if (!body.empty() && body[0] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput(std::string("config: ") + e.what());
    }
    for (auto& [k, v] : j.items()) {
      if (v.is_structured()) throw InvalidInput("config: nested value for '" + k + "'");
      out[normalize_key(k)] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return out;
  }
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("config line " + std::to_string(n) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidInput("config line " + std::to_string(n) + ": empty key");
    out[normalize_key(key)] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace qplife::io
