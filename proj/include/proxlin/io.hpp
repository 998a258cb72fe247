#pragma once

// Tabular artifacts: CSV with '#' metadata lines, and JSON {metadata, columns, rows}.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "proxlin/error.hpp"

namespace proxlin {

// Null is written as NA (CSV) or null (JSON).
using Cell = std::variant<std::monostate, long, double, bool>;

struct Table {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_meta(std::string key, std::string value) {
    metadata.emplace_back(std::move(key), std::move(value));
  }

  void add_row(std::vector<Cell> row) {
    require(row.size() == columns.size(), ErrorKind::kInvalidArgument, "table row width mismatch");
    rows.push_back(std::move(row));
  }

  std::optional<std::string> meta(const std::string& key) const {
    for (const auto& [k, v] : metadata)
      if (k == key) return v;
    return std::nullopt;
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw Error(ErrorKind::kInvalidArgument, "no column '" + name + "'");
  }
};

inline Cell cell(const std::optional<long>& v) { return v ? Cell(*v) : Cell(std::monostate{}); }

inline double as_double(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* l = std::get_if<long>(&c)) return double(*l);
  if (const auto* b = std::get_if<bool>(&c)) return *b ? 1.0 : 0.0;
  return NAN;
}

namespace detail {
inline std::string format_cell(const Cell& c) {
  struct V {
    std::string operator()(std::monostate) const { return "NA"; }
    std::string operator()(long v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(double v) const {
      if (std::isnan(v)) return "nan";
      if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      std::string out = buf;
      if (out.find_first_of(".e") == std::string::npos) out += ".0";
      return out;
    }
  };
  return std::visit(V{}, c);
}

inline Cell parse_cell(const std::string& s) {
  if (s == "NA") return std::monostate{};
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.find_first_of(".eEna") == std::string::npos) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() + s.size() && !s.empty()) return v;
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  require(!s.empty() && end == s.c_str() + s.size(), ErrorKind::kIo, "unparseable CSV cell '" + s + "'");
  return v;
}
}  // namespace detail

inline std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (const auto& [k, v] : t.metadata) os << "# " << k << ": " << v << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::format_cell(row[i]);
    os << '\n';
  }
  return os.str();
}

inline std::string to_json(const Table& t) {
  nlohmann::ordered_json j;
  j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : t.metadata) j["metadata"][k] = v;
  j["columns"] = t.columns;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    auto r = nlohmann::ordered_json::array();
    for (const auto& c : row) {
      struct V {
        nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
        nlohmann::ordered_json operator()(long v) const { return v; }
        nlohmann::ordered_json operator()(bool v) const { return v; }
        nlohmann::ordered_json operator()(double v) const {
          if (!std::isfinite(v)) return nullptr;
          return v;
        }
      };
      r.push_back(std::visit(V{}, c));
    }
    j["rows"].push_back(std::move(r));
  }
  return j.dump(1) + "\n";
}

inline Table from_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!header && line.rfind("# ", 0) == 0) {
      const auto colon = line.find(": ");
      require(colon != std::string::npos, ErrorKind::kIo, "bad CSV metadata line");
      t.add_meta(line.substr(2, colon - 2), line.substr(colon + 2));
      continue;
    }
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string p;
    while (std::getline(ss, p, ',')) parts.push_back(p);
    if (!header) {
      t.columns = parts;
      header = true;
      continue;
    }
    std::vector<Cell> row;
    for (const auto& s : parts) row.push_back(detail::parse_cell(s));
    t.add_row(std::move(row));
  }
  return t;
}

inline Table from_json(const std::string& text) {
  Table t;
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kIo, std::string("invalid JSON: ") + e.what());
  }
  for (const auto& [k, v] : j.at("metadata").items()) t.add_meta(k, v.get<std::string>());
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    std::vector<Cell> row;
    for (const auto& c : r) {
      if (c.is_null()) row.emplace_back(std::monostate{});
      else if (c.is_boolean()) row.emplace_back(c.get<bool>());
      else if (c.is_number_integer()) row.emplace_back(c.get<long>());
      else row.emplace_back(c.get<double>());
    }
    t.add_row(std::move(row));
  }
  return t;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "cannot open '" + path + "' for writing");
  f << text;
  f.close();
  if (!f) throw Error(ErrorKind::kIo, "failed writing '" + path + "'");
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace proxlin
