// mfsim <kind> --config <path> [--seed u64] [--out <dir>] [--threads n]
//
// Exit status: 0 when every rule passes, 1 on a statistical failure, 2 on a
// configuration or runtime error.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfsim/errors.hpp"
#include "mfsim/experiments.hpp"
#include "mfsim/parallel.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitStatistical = 1;
constexpr int kExitError = 2;

int fail(const std::string& code, const std::string& message) {
  std::cerr << "mfsim: error [" << code << "]: " << message << "\n";
  return kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle simulation and verification experiments for conditional McKean-Vlasov equations"};
  std::string kind;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> threads;
  app.add_option("kind", kind, "experiment kind")->required();
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out_dir, "output directory (default: config 'output', else out/<kind>)");
  app.add_option("--threads", threads, "worker threads (fallback: MFSIM_THREADS)")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitError;
  }

  try {
    if (!threads) {
      if (const char* env = std::getenv("MFSIM_THREADS")) {
        try {
          threads = std::stoi(env);
        } catch (const std::exception&) {
          return fail("invalid_config", std::string("MFSIM_THREADS is not an integer: ") + env);
        }
        if (*threads < 1) return fail("invalid_config", "MFSIM_THREADS must be positive");
      }
    }
    if (threads) mfsim::set_threads(*threads);

    std::ifstream in(config_path);
    if (!in) return fail("io_failure", "cannot open config '" + config_path + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      return fail("invalid_config", std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) return fail("invalid_config", "config must be a JSON object");
    if (doc.contains("kind") && doc["kind"] != kind) {
      return fail("invalid_config", "config kind '" + doc["kind"].dump() + "' does not match '" + kind + "'");
    }
    doc["kind"] = kind;
    if (seed) doc["seed"] = *seed;

    const auto cfg = mfsim::ExperimentConfig::from_json(doc);
    const auto report = mfsim::run(cfg);
    const std::string dir = !out_dir.empty() ? out_dir : !cfg.output.empty() ? cfg.output : "out/" + kind;
    report.write(dir);

    for (const auto& r : report.rules) {
      std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    }
    std::cout << "report written to " << dir << "/report.json\n";
    return report.pass() ? kExitPass : kExitStatistical;
  } catch (const mfsim::Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return fail("runtime_error", e.what());
  }
}
