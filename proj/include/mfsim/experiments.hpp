#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfsim/report.hpp"

namespace mfsim {

/// One experiment, parsed from a JSON document. Every field has a default;
/// to_json() echoes the fully resolved configuration. See
/// docs/report-schema.md for the per-kind meaning of the fields.
struct ExperimentConfig {
  std::string kind = "simulate";
  std::string model = "constant";
  nlohmann::json model_params = nlohmann::json::object();
  nlohmann::json initial = {{"law", "gaussian"}, {"mean", {0.0}}, {"std", 1.0}};
  std::size_t d = 1;
  std::size_t d1 = 1;
  std::size_t n = 100;
  double dt = 0.01;
  double horizon = 1.0;
  double mass = 1.0;
  std::uint64_t seed = 1;
  std::size_t paths = 1;
  std::size_t inner = 200;
  std::vector<std::string> phi;   // empty: kind default
  std::vector<double> times;      // empty: {T}
  std::vector<std::size_t> ns;    // rate / chaos sample sizes
  std::vector<double> levels;     // time steps for refinement studies
  double tol = 1e-3;
  std::size_t max_iter = 20;
  std::size_t grid_resolution = 16;
  std::string reference = "auto";  // closed_form | discrete | run | auto
  std::size_t reference_particles = 0;
  std::size_t probes = 256;
  std::size_t martingale_reps = 500;
  std::size_t martingale_samples = 256;
  bool witness = true;
  std::map<std::string, double> tolerances;
  std::string output;

  /// Parses and validates; throws ConfigError ("invalid_config",
  /// "invalid_grid", "unknown_model").
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  double tolerance(const std::string& key) const;
};

/// Kinds accepted by run().
const std::vector<std::string>& experiment_kinds();

/// Dispatches to the pipeline for cfg.kind. Statistical failures are
/// reported through the rules; configuration and runtime problems throw.
RunReport run(const ExperimentConfig& cfg);

}  // namespace mfsim
