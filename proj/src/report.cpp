#include "mfsim/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mfsim/errors.hpp"

namespace mfsim {

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw InvalidArgument("table '" + name + "': row width does not match header");
  rows.push_back(std::move(row));
}

std::string cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string cell(std::uint64_t v) { return std::to_string(v); }

bool RunReport::pass() const {
  for (const auto& r : rules)
    if (!r.pass) return false;
  return true;
}

void RunReport::metric(std::string name, double value, std::optional<double> error) {
  metrics.push_back({std::move(name), value, error});
}

void RunReport::rule(std::string name, bool pass, std::string detail) {
  rules.push_back({std::move(name), pass, std::move(detail)});
}

const Metric* RunReport::find_metric(const std::string& name) const {
  for (const auto& m : metrics)
    if (m.name == name) return &m;
  return nullptr;
}

const Rule* RunReport::find_rule(const std::string& name) const {
  for (const auto& r : rules)
    if (r.name == name) return &r;
  return nullptr;
}

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return cell(v);
}

}  // namespace

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["config"] = config;
  j["pass"] = pass();
  auto& ms = j["metrics"] = nlohmann::json::array();
  for (const auto& m : metrics) {
    nlohmann::json e{{"name", m.name}, {"value", number(m.value)}};
    e["error"] = m.error ? number(*m.error) : nlohmann::json("exact");
    ms.push_back(e);
  }
  auto& rs = j["rules"] = nlohmann::json::array();
  for (const auto& r : rules) rs.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
  auto& ts = j["tables"] = nlohmann::json::array();
  for (const auto& t : tables) ts.push_back(t.name + ".csv");
  j["timing"] = {{"wall_seconds", wall_seconds},
                 {"particle_steps", particle_steps},
                 {"particle_steps_per_second", wall_seconds > 0.0 ? particle_steps / wall_seconds : 0.0}};
  return j;
}

std::string RunReport::csv(const Table& table) const {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) out += (c ? "," : "") + table.columns[c];
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + row[c];
    out += '\n';
  }
  return out;
}

void RunReport::write(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("io_failure", "cannot create output directory " + dir.string() + ": " + ec.message());
  auto put = [&](const std::filesystem::path& file, const std::string& text) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw ConfigError("io_failure", "cannot open " + file.string() + " for writing");
    os << text;
    if (!os) throw ConfigError("io_failure", "write to " + file.string() + " failed");
  };
  put(dir / "report.json", to_json().dump(2) + "\n");
  for (const auto& t : tables) put(dir / (t.name + ".csv"), csv(t));
}

}  // namespace mfsim
