#include <doctest.h>

#include <string>

#include <json.hpp>

#include "mfsim/errors.hpp"
#include "mfsim/experiments.hpp"

using namespace mfsim;
using nlohmann::json;

namespace {

std::string config_error_code(const json& j) {
  try {
    ExperimentConfig::from_json(j);
  } catch (const ConfigError& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("config validation") {
  CHECK(config_error_code({{"kind", "simulate"}, {"bogus", 1}}) == "invalid_config");
  CHECK(config_error_code({{"kind", "simulate"}, {"dt", 0.0}}) == "invalid_grid");
  CHECK(config_error_code({{"kind", "simulate"}, {"dt", 0.3}, {"T", 1.0}}) == "invalid_grid");
  CHECK(config_error_code({{"kind", "simulate"}, {"model", "nope"}}) == "unknown_model");
  CHECK(config_error_code({{"kind", "nope"}}) == "invalid_config");
  CHECK(config_error_code({{"kind", "simulate"}, {"N", -3}}) == "invalid_config");
  CHECK(config_error_code({{"kind", "simulate"}, {"tolerances", {{"zz", 1.0}}}}) == "invalid_config");
  CHECK(config_error_code({{"kind", "simulate"}}).empty());
}

TEST_CASE("config echo round trip") {
  const json j{{"kind", "picard"}, {"model", {{"name", "mean_reversion_to_conditional_mean"}, {"params", {{"beta", 2.0}}}}},
               {"N", 50}, {"dt", 0.05}, {"T", 0.5}, {"seed", 9}, {"times", {0.25, 0.5}}, {"tolerances", {{"z", 4.0}}}};
  const auto cfg = ExperimentConfig::from_json(j);
  CHECK(cfg.tolerance("z") == 4.0);
  const auto echoed = cfg.to_json();
  const auto again = ExperimentConfig::from_json(echoed);
  CHECK(again.to_json() == echoed);
  CHECK(again.model == "mean_reversion_to_conditional_mean");
  CHECK(again.n == 50);
}

TEST_CASE("simulate report on the shift model") {
  auto cfg = ExperimentConfig::from_json({{"kind", "simulate"},
                                          {"model", {{"name", "constant"}, {"params", {{"b", 0.5}, {"sigma", 1.0}}}}},
                                          {"N", 10}, {"dt", 0.1}, {"T", 1.0}, {"paths", 1}});
  const auto rep = run(cfg);
  REQUIRE(rep.find_rule("mass_conservation"));
  CHECK(rep.find_rule("mass_conservation")->pass);
  REQUIRE(rep.find_metric("translation_residual"));
  CHECK(rep.find_metric("translation_residual")->value < 1e-12);
  const auto j = rep.to_json();
  bool mass_exact = false;
  for (const auto& m : j["metrics"]) {
    if (m["name"] == "mass_drift") mass_exact = m["error"] == "exact";
  }
  CHECK(mass_exact);

  // Reruns agree except for timing.
  auto a = rep.to_json();
  auto b = run(cfg).to_json();
  a.erase("timing");
  b.erase("timing");
  CHECK(a == b);
}

TEST_CASE("assumption audit of a clean model") {
  const auto cfg = ExperimentConfig::from_json(
      {{"kind", "assumptions"}, {"model", "mean_reversion_to_conditional_mean"}, {"probes", 64}});
  const auto rep = run(cfg);
  CHECK(rep.pass());
  CHECK(rep.find_rule("assumptions_clean")->pass);
}
