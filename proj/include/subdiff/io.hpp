#pragma once

// CSV and JSON data exchange, the shared key-value config format, and the
// config hash stamped into every output for reproducibility audits.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "subdiff/densities.hpp"
#include "subdiff/solver.hpp"

namespace subdiff {

// shortest round-trip decimal form (printf %.17g with trailing cleanup)
std::string format_double(double v);

struct Csv {
  std::vector<std::string> comments;  // emitted as leading '# ...' lines
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // column-major, equal lengths
};

void write_csv(const std::string& path, const Csv& table);
Csv read_csv(const std::string& path);  // skips comment lines

// long-format exports: one row per cell / grid node
void write_density_csv(const std::string& path, const DensityTable& table,
                       const std::vector<std::string>& comments = {});
void write_field_csv(const std::string& path, const SolutionField& field,
                     const std::vector<std::string>& comments = {});
SolutionField read_field_csv(const std::string& path);

// minimal JSON object writer for metadata sidecars; values arrive
// pre-rendered (format_double for numbers, raw for strings)
class JsonSidecar {
 public:
  void set(const std::string& key, const std::string& value);  // string value
  void set_number(const std::string& key, double value);
  void set_raw(const std::string& key, const std::string& json);  // verbatim
  void write(const std::string& path) const;
  std::string text() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;  // key -> rendered
};

// config: '#' comments, blank lines, 'key = value'; keys are dot-scoped by
// convention (model, boundary, grid.dx, mc.n_paths, ...)
struct RunConfig {
  std::map<std::string, std::string> kv;

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::string require(const std::string& key) const;  // throws when absent

  // canonical form: sorted 'key = value' lines; hashing input
  std::string canonical_text() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
// "key=value" from a CLI flag; replaces or adds the key
void apply_override(RunConfig& cfg, const std::string& assignment);

std::uint64_t fnv1a64(const std::string& bytes);
// 16 hex digits of fnv1a64 over the canonical config text
std::string config_hash(const RunConfig& cfg);

}  // namespace subdiff
