#pragma once

// Scenario configuration, result tables and the four pipelines behind the
// command-line driver.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "arrival/numerics.hpp"

namespace arrival::scenario {

// Bad or unknown configuration; carries the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& msg)
      : Error(key + ": " + msg), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Flat key=value configuration. Every key has a default; unknown keys are
// rejected. Values are kept as text and parsed on access.
class ScenarioConfig {
 public:
  ScenarioConfig();

  // "key = value" lines, '#' comments, blank lines ignored
  static ScenarioConfig from_file(const std::filesystem::path& path);
  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);
  // "key=value"
  void set_assignment(const std::string& assignment);

  const std::string& text(const std::string& key) const;
  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;

  // t_values: either the single "t" or a log/linear sweep
  std::vector<double> times() const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  static const std::map<std::string, std::string>& defaults();

  // range checks for the selected pipeline
  void validate() const;

 private:
  std::map<std::string, std::string> values_;
};

struct Column {
  std::string name;
  std::vector<double> values;
};

class ResultTable {
 public:
  void add_meta(const std::string& key, const std::string& value);
  void add_column(const std::string& name, std::vector<double> values);
  // two columns, name_re and name_im
  void add_complex_column(const std::string& name, const std::vector<cplx>& values);

  const std::vector<std::pair<std::string, std::string>>& meta() const { return meta_; }
  const std::vector<Column>& columns() const { return columns_; }
  std::size_t rows() const;
  const Column& column(const std::string& name) const;
  std::string meta_value(const std::string& key) const;  // empty if absent

  std::string to_csv() const;
  std::string to_json() const;
  static ResultTable from_csv(const std::string& text);

 private:
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<Column> columns_;
};

enum class Format { csv, json };
Format parse_format(const std::string& s);
const char* extension(Format f);

void emit(const ResultTable& table, Format format, const std::filesystem::path& path);

enum class PlotKind { smalltime_scaling, survival_vs_t, pn_histogram, epsilon_heatmap };
PlotKind parse_plot_kind(const std::string& s);
std::string plot_kind_name(PlotKind k);
// Python/matplotlib script reading the CSV by its file name, relative to the
// script's own directory.
std::string plot_script(const ResultTable& table, PlotKind kind, const std::string& csv_name);
void emit_plot_script(const ResultTable& table, PlotKind kind, const std::string& csv_name,
                      const std::filesystem::path& path);

// Quantum pipeline found the decoherence regime check failing under strict.
class RegimeWarning : public Error {
 public:
  using Error::Error;
};

ResultTable run_scenario(const ScenarioConfig& config);

// Runs a scenario to a CSV string; used by the determinism check.
std::string run_to_csv(const ScenarioConfig& config);

std::string version();

}  // namespace arrival::scenario
