#include "subdiff/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace subdiff {

std::string format_double(double v) {
  char buf[40];
  if (v == std::floor(v) && std::fabs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // drop digits while the value still round-trips, so stable quantities
  // serialize identically across runs and platforms
  for (int prec = 1; prec < 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof probe, "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) return probe;
  }
  return buf;
}

void write_csv(const std::string& path, const Csv& table) {
  if (table.header.size() != table.columns.size()) {
    throw std::invalid_argument("write_csv: header/column count mismatch");
  }
  std::size_t rows = table.columns.empty() ? 0 : table.columns[0].size();
  for (const auto& c : table.columns) {
    if (c.size() != rows) throw std::invalid_argument("write_csv: ragged columns");
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  for (const auto& c : table.comments) os << "# " << c << "\n";
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    os << (j ? "," : "") << table.header[j];
  }
  os << "\n";
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
      os << (j ? "," : "") << format_double(table.columns[j][i]);
    }
    os << "\n";
  }
  if (!os) throw std::runtime_error("write_csv: write failed for " + path);
}

Csv read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_csv: cannot open " + path);
  Csv table;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string cell;
    if (table.header.empty()) {
      while (std::getline(ls, cell, ',')) table.header.push_back(cell);
      table.columns.resize(table.header.size());
      continue;
    }
    std::size_t j = 0;
    while (std::getline(ls, cell, ',')) {
      if (j >= table.columns.size()) throw std::runtime_error("read_csv: extra cell in " + path);
      table.columns[j++].push_back(std::strtod(cell.c_str(), nullptr));
    }
    if (j != table.columns.size()) throw std::runtime_error("read_csv: short row in " + path);
  }
  return table;
}

void write_density_csv(const std::string& path, const DensityTable& table,
                       const std::vector<std::string>& comments) {
  Csv out;
  out.comments = comments;
  bool derivs = !table.df_ds.empty();
  out.header = {"s", "t", "f"};
  if (derivs) {
    out.header.push_back("df_ds");
    out.header.push_back("df_dt");
  }
  out.columns.resize(out.header.size());
  for (std::size_t i = 0; i < table.s.size(); ++i) {
    for (std::size_t k = 0; k < table.t.size(); ++k) {
      out.columns[0].push_back(table.s[i]);
      out.columns[1].push_back(table.t[k]);
      out.columns[2].push_back(table.value(i, k));
      if (derivs) {
        out.columns[3].push_back(table.df_ds[i * table.t.size() + k]);
        out.columns[4].push_back(table.df_dt[i * table.t.size() + k]);
      }
    }
  }
  write_csv(path, out);
}

void write_field_csv(const std::string& path, const SolutionField& field,
                     const std::vector<std::string>& comments) {
  Csv out;
  out.comments = comments;
  out.header = {"t", "x", "u"};
  out.columns.resize(3);
  for (std::size_t k = 0; k < field.nt(); ++k) {
    for (std::size_t j = 0; j < field.nx(); ++j) {
      out.columns[0].push_back(field.t_grid[k]);
      out.columns[1].push_back(field.x_grid[j]);
      out.columns[2].push_back(field.value(k, j));
    }
  }
  write_csv(path, out);
}

SolutionField read_field_csv(const std::string& path) {
  Csv in = read_csv(path);
  if (in.header != std::vector<std::string>{"t", "x", "u"}) {
    throw std::runtime_error("read_field_csv: expected header t,x,u in " + path);
  }
  SolutionField field;
  const auto& t = in.columns[0];
  const auto& x = in.columns[1];
  for (double v : t) {
    if (field.t_grid.empty() || v > field.t_grid.back()) field.t_grid.push_back(v);
  }
  std::size_t nx = 0;
  while (nx < t.size() && t[nx] == t[0]) ++nx;
  field.x_grid.assign(x.begin(), x.begin() + nx);
  if (field.t_grid.size() * nx != t.size()) {
    throw std::runtime_error("read_field_csv: rows do not form a full grid in " + path);
  }
  field.u = in.columns[2];
  return field;
}

void JsonSidecar::set(const std::string& key, const std::string& value) {
  entries_.emplace_back(key, nlohmann::json(value).dump());
}

void JsonSidecar::set_number(const std::string& key, double value) {
  entries_.emplace_back(key, format_double(value));
}

void JsonSidecar::set_raw(const std::string& key, const std::string& json) {
  entries_.emplace_back(key, json);
}

std::string JsonSidecar::text() const {
  std::string out = "{\n";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    out += "  " + nlohmann::json(entries_[i].first).dump() + ": " + entries_[i].second;
    out += (i + 1 < entries_.size()) ? ",\n" : "\n";
  }
  out += "}\n";
  return out;
}

void JsonSidecar::write(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("JsonSidecar: cannot open " + path);
  os << text();
  if (!os) throw std::runtime_error("JsonSidecar: write failed for " + path);
}

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  char* end = nullptr;
  double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str()) {
    throw std::invalid_argument("config key '" + key + "' is not numeric: " + it->second);
  }
  return v;
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' is not an integer: " + it->second);
  }
}

std::string RunConfig::require(const std::string& key) const {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::invalid_argument("config is missing required key '" + key + "'");
  return it->second;
}

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : kv) {  // std::map iterates sorted
    out += k + " = " + v + "\n";
  }
  return out;
}

namespace {
std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  " is not 'key = value': " + t);
    }
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + " has an empty key");
    }
    cfg.kv[key] = val;
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override must be key=value: " + assignment);
  }
  cfg.kv[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.canonical_text())));
  return buf;
}

}  // namespace subdiff
