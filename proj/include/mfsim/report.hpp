#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mfsim {

/// A reported statistic. `error` is its Monte-Carlo standard error; nullopt
/// means the value is exact (serialized as the tag "exact").
struct Metric {
  std::string name;
  double value = 0.0;
  std::optional<double> error;
};

struct Rule {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Raw output table written as CSV. Cells are preformatted strings.
struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
};

/// Shortest round-trip formatting (%.17g) used for every CSV number.
std::string cell(double v);
std::string cell(std::uint64_t v);

struct RunReport {
  std::string kind;
  nlohmann::json config;
  std::vector<Metric> metrics;
  std::vector<Rule> rules;
  std::vector<Table> tables;
  double wall_seconds = 0.0;
  double particle_steps = 0.0;

  bool pass() const;
  void metric(std::string name, double value, std::optional<double> error);
  void rule(std::string name, bool pass, std::string detail);
  const Metric* find_metric(const std::string& name) const;
  const Rule* find_rule(const std::string& name) const;

  nlohmann::json to_json() const;
  std::string csv(const Table& table) const;
  /// Writes report.json and one <table>.csv per table into `dir` (created
  /// if needed). Throws ConfigError("io_failure") on failure.
  void write(const std::filesystem::path& dir) const;
};

}  // namespace mfsim
