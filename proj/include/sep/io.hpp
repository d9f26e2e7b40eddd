#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sep/config.hpp"
#include "sep/error.hpp"

namespace sep {

/// A table cell: reals are written in shortest round-trip form, integers exactly.
using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw domain_error("table: row width mismatch");
    rows.push_back(std::move(row));
  }
};

inline std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_cell(row[k]);
    os << '\n';
  }
}

inline nlohmann::json table_to_json(const Table& t) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t k = 0; k < row.size(); ++k)
      std::visit([&](const auto& v) { obj[t.columns[k]] = v; }, row[k]);
    arr.push_back(std::move(obj));
  }
  return arr;
}

inline std::filesystem::path output_path(const std::filesystem::path& dir, const std::string& stem,
                                         OutputFormat fmt) {
  return dir / (stem + (fmt == OutputFormat::csv ? ".csv" : ".json"));
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw config_error("cannot create output directory '" + dir.string() + "': " + ec.message());
}

inline std::filesystem::path write_table(const std::filesystem::path& dir, const std::string& stem,
                                         const Table& t, OutputFormat fmt) {
  ensure_directory(dir);
  const auto path = output_path(dir, stem, fmt);
  std::ofstream os(path);
  if (!os) throw config_error("cannot open '" + path.string() + "' for writing");
  if (fmt == OutputFormat::csv)
    write_csv(os, t);
  else
    os << table_to_json(t).dump(1) << '\n';
  return path;
}

inline std::filesystem::path write_json(const std::filesystem::path& dir, const std::string& name,
                                        const nlohmann::json& j) {
  ensure_directory(dir);
  const auto path = dir / name;
  std::ofstream os(path);
  if (!os) throw config_error("cannot open '" + path.string() + "' for writing");
  os << j.dump(1) << '\n';
  return path;
}

/// Header plus rows of raw string cells.
struct CsvData {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t k = 0; k < columns.size(); ++k)
      if (columns[k] == name) return k;
    throw domain_error("csv: no column named '" + name + "'");
  }
};

inline CsvData read_csv(std::istream& is) {
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  CsvData d;
  std::string line;
  if (!std::getline(is, line)) throw domain_error("csv: missing header");
  d.columns = split(line);
  while (std::getline(is, line))
    if (!line.empty()) d.rows.push_back(split(line));
  return d;
}

inline CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw domain_error("csv: cannot open '" + path.string() + "'");
  return read_csv(is);
}

inline double parse_real(const std::string& s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw domain_error("csv: not a real number: '" + s + "'");
  return x;
}

}  // namespace sep
