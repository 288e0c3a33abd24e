#include "mfsim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>
#include <type_traits>

#include "mfsim/chaos.hpp"
#include "mfsim/coeffs.hpp"
#include "mfsim/duality.hpp"
#include "mfsim/errors.hpp"
#include "mfsim/fpe.hpp"
#include "mfsim/initial_law.hpp"
#include "mfsim/mckv.hpp"
#include "mfsim/models.hpp"
#include "mfsim/noise.hpp"
#include "mfsim/rng.hpp"
#include "mfsim/simulate.hpp"
#include "mfsim/stratonovich.hpp"
#include "mfsim/test_functions.hpp"

namespace mfsim {
namespace {

using nlohmann::json;

// Sub-seeds derived from the master seed.
enum Salt : std::uint64_t {
  kSaltW = 1,
  kSaltB = 2,
  kSaltX0 = 3,
  kSaltInner = 4,
  kSaltB2 = 5,
  kSaltB3 = 6,
  kSaltMartingaleW = 7,
  kSaltMartingaleB = 8,
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

InitialLaw make_initial(const json& spec, std::size_t d) {
  if (!spec.is_object() || !spec.contains("law") || !spec.at("law").is_string()) {
    throw ConfigError("invalid_config", "initial must be an object with a string field 'law'");
  }
  const std::string law = spec.at("law").get<std::string>();
  auto vec = [&](const char* key, std::vector<double> fallback) {
    if (!spec.contains(key)) return fallback;
    const auto& v = spec.at(key);
    if (v.is_number()) return std::vector<double>(d, v.get<double>());
    if (!v.is_array()) throw ConfigError("invalid_config", std::string("initial.") + key + " must be a number or array");
    return v.get<std::vector<double>>();
  };
  auto num = [&](const char* key, double fallback) {
    if (!spec.contains(key)) return fallback;
    if (!spec.at(key).is_number()) throw ConfigError("invalid_config", std::string("initial.") + key + " must be a number");
    return spec.at(key).get<double>();
  };
  try {
    InitialLaw out = [&] {
      if (law == "gaussian") return InitialLaw::gaussian(vec("mean", std::vector<double>(d, 0.0)), num("std", 1.0));
      if (law == "uniform") return InitialLaw::uniform(d, num("lo", -1.0), num("hi", 1.0));
      if (law == "point") return InitialLaw::point(vec("location", std::vector<double>(d, 0.0)));
      if (law == "atoms") return InitialLaw::atoms(d, vec("locations", {}), vec("weights", {}));
      throw ConfigError("invalid_config", "unknown initial law '" + law + "'");
    }();
    if (out.dim() != d) throw ConfigError("invalid_config", "initial law dimension does not match d");
    return out;
  } catch (const InvalidArgument& e) {
    throw ConfigError("invalid_config", std::string("initial law: ") + e.what());
  }
}

// Everything a pipeline needs, built once from the config.
struct Context {
  const ExperimentConfig& cfg;
  TimeGrid grid;
  InitialLaw initial;
  std::uint64_t w_seed;
  std::uint64_t b_seed;
  std::uint64_t x0_seed;

  explicit Context(const ExperimentConfig& c)
      : cfg(c),
        grid(c.horizon, c.dt),
        initial(make_initial(c.initial, c.d)),
        w_seed(mix_seed(c.seed, kSaltW)),
        b_seed(mix_seed(c.seed, kSaltB)),
        x0_seed(mix_seed(c.seed, kSaltX0)) {}

  PathId path(std::size_t p) const { return PathId{w_seed, static_cast<std::uint32_t>(p)}; }
  std::vector<double> x0(std::size_t n, std::size_t p) const {
    return initial.sample(n, x0_seed, static_cast<std::uint32_t>(p));
  }
};

std::vector<TestFunction> phis(const ExperimentConfig& cfg, std::vector<std::string> fallback) {
  const auto& names = cfg.phi.empty() ? fallback : cfg.phi;
  std::vector<TestFunction> out;
  if (names.size() == 1 && names[0] == "bank") return test_functions::bank(cfg.d);
  for (const auto& n : names) {
    try {
      out.push_back(test_functions::by_name(cfg.d, n));
    } catch (const InvalidArgument& e) {
      throw ConfigError("invalid_config", e.what());
    }
  }
  return out;
}

// r * E phi under the closed-form conditional law, if the model has one.
std::optional<ReferenceFunctional> closed_form(const Context& ctx, const TestFunction& phi, bool discrete) {
  const auto& cfg = ctx.cfg;
  if (cfg.d != 1 || cfg.d1 != 1) return std::nullopt;
  const NoiseBundle probe(ctx.grid, 1, 1, 0, ctx.path(0), 0);
  const auto law = models::conditional_law(cfg.model, cfg.model_params, ctx.initial, probe, 0, discrete);
  if (!law || !models::gaussian_expectation(phi.name, law->mean, law->variance)) return std::nullopt;
  const std::string model = cfg.model;
  const json params = cfg.model_params;
  const InitialLaw initial = ctx.initial;
  const std::string name = phi.name;
  const double mass = cfg.mass;
  return ReferenceFunctional([=](const NoiseBundle& noise, std::size_t k) {
    const auto g = models::conditional_law(model, params, initial, noise, k, discrete);
    return mass * *models::gaussian_expectation(name, g->mean, g->variance);
  });
}

// Resolves cfg.reference for kinds that can use a closed form.
std::optional<ReferenceFunctional> reference_for(const Context& ctx, const TestFunction& phi, bool prefer_discrete,
                                                 bool allow_run) {
  const std::string& mode = ctx.cfg.reference;
  if (mode == "run") {
    if (!allow_run) throw ConfigError("invalid_config", "this experiment needs a closed-form reference");
    return std::nullopt;
  }
  const bool discrete = mode == "discrete" || (mode == "auto" && prefer_discrete);
  auto ref = closed_form(ctx, phi, discrete);
  if (!ref && mode != "auto") {
    throw ConfigError("invalid_config", "model '" + ctx.cfg.model + "' has no closed-form conditional law for '" +
                                            phi.name + "' with this initial law");
  }
  if (!ref && !allow_run) throw ConfigError("invalid_config", "this experiment needs a closed-form reference");
  return ref;
}

// ---------------------------------------------------------------- simulate

void run_simulate(const Context& ctx, RunReport& rep) {
  const auto& cfg = ctx.cfg;
  const auto coeffs = models::make_model(cfg.model, cfg.d, cfg.d1, cfg.model_params);
  const auto bank = phis(cfg, cfg.d == 1 ? std::vector<std::string>{"sin"} : std::vector<std::string>{"bank"});
  std::vector<std::optional<ReferenceFunctional>> refs;
  for (const auto& phi : bank) refs.push_back(closed_form(ctx, phi, false));
  const std::size_t m = ctx.grid.steps();

  Table table{"simulate", {"path", "k", "t"}, {}};
  for (std::size_t c = 0; c < cfg.d1; ++c) table.columns.push_back("w" + std::to_string(c));
  table.columns.push_back("mass");
  for (std::size_t c = 0; c < cfg.d; ++c) table.columns.push_back("mean" + std::to_string(c));
  for (std::size_t f = 0; f < bank.size(); ++f) {
    table.columns.push_back("phi_" + bank[f].name);
    if (refs[f]) table.columns.push_back("oracle_" + bank[f].name);
  }

  double mass_drift = 0.0;
  double mass_error = 0.0;
  double translation = 0.0;
  std::vector<double> oracle_dev(bank.size(), 0.0);
  std::vector<double> oracle_se(bank.size(), 0.0);
  const bool constant_model = cfg.model == "constant";
  for (std::size_t p = 0; p < cfg.paths; ++p) {
    const NoiseBundle noise(ctx.grid, cfg.d1, cfg.d, cfg.n, ctx.path(p), ctx.b_seed);
    const auto x0 = ctx.x0(cfg.n, p);
    const auto ens = run_particle_system(coeffs, noise, x0, cfg.mass);
    rep.particle_steps += static_cast<double>(cfg.n * m);

    const auto mu0 = empirical_law(ens, 0);
    mass_error = std::max(mass_error, std::abs(mu0.mass() - cfg.mass));
    // Constant coefficients: X_k = X_0 + b t_k + sigma W_k + alpha B_k exactly.
    SmallMatrix s, alpha;
    std::vector<double> b(cfg.d);
    if (constant_model) {
      const auto snap = coeffs.snapshot(0.0, mu0);
      s = SmallMatrix(cfg.d, cfg.d1);
      snap->sigma(mu0.point(0), s);
      snap->drift(mu0.point(0), b);
      alpha = *fixed_alpha(*snap, cfg.d, cfg.d1, 0.0, mu0.point(0));
    }
    std::vector<double> bsum(cfg.n * cfg.d, 0.0);
    std::vector<double> w(cfg.d1, 0.0);
    std::vector<double> expected(cfg.d);
    for (std::size_t k = 0; k <= m; ++k) {
      const auto mu = empirical_law(ens, k);
      mass_drift = std::max(mass_drift, std::abs(mu.mass() - mu0.mass()));
      if (constant_model) {
        for (std::size_t i = 0; i < cfg.n; ++i) {
          const auto x = ens.position(i, k);
          for (std::size_t c = 0; c < cfg.d; ++c) expected[c] = x0[i * cfg.d + c] + b[c] * ctx.grid.time(k);
          s.apply_add(w, expected);
          alpha.apply_add(std::span<const double>(bsum).subspan(i * cfg.d, cfg.d), expected);
          for (std::size_t c = 0; c < cfg.d; ++c) translation = std::max(translation, std::abs(x[c] - expected[c]));
        }
      }
      std::vector<std::string> row{cell(std::uint64_t{p}), cell(std::uint64_t{k}), cell(ctx.grid.time(k))};
      for (double v : w) row.push_back(cell(v));
      row.push_back(cell(mu.mass()));
      for (double v : mu.mean()) row.push_back(cell(v));
      for (std::size_t f = 0; f < bank.size(); ++f) {
        const double v = integrate(mu, bank[f]);
        row.push_back(cell(v));
        if (refs[f]) {
          const double o = (*refs[f])(noise, k);
          row.push_back(cell(o));
          if (std::abs(v - o) > oracle_dev[f]) {
            oracle_dev[f] = std::abs(v - o);
            oracle_se[f] = integrate_with_error(mu, bank[f]).standard_error;
          }
        }
      }
      table.add(std::move(row));
      if (k < m) {
        const auto dw = noise.dw(k);
        for (std::size_t c = 0; c < cfg.d1; ++c) w[c] += dw[c];
        for (std::size_t i = 0; i < cfg.n; ++i) {
          const auto db = noise.db(i, k);
          for (std::size_t c = 0; c < cfg.d; ++c) bsum[i * cfg.d + c] += db[c];
        }
      }
    }
  }
  rep.tables.push_back(std::move(table));

  rep.metric("mass_drift", mass_drift, std::nullopt);
  rep.metric("mass_error", mass_error, std::nullopt);
  rep.rule("mass_conservation", mass_drift == 0.0 && mass_error <= 1e-12 * cfg.mass,
           "max_k |mass_k - mass_0| = " + fmt(mass_drift) + ", |mass_0 - r| = " + fmt(mass_error));
  if (constant_model) {
    const double tol = cfg.tolerance("translation");
    rep.metric("translation_residual", translation, std::nullopt);
    rep.rule("translation_oracle", translation < tol, "max residual " + fmt(translation) + " < " + fmt(tol));
  }
  for (std::size_t f = 0; f < bank.size(); ++f) {
    if (!refs[f]) continue;
    const double tol = cfg.tolerances.count("oracle") ? cfg.tolerances.at("oracle")
                                                       : 4.0 * cfg.mass / std::sqrt(static_cast<double>(cfg.n));
    rep.metric("oracle_sup_" + bank[f].name, oracle_dev[f], oracle_se[f]);
    rep.rule("oracle_" + bank[f].name, oracle_dev[f] <= tol,
             "max_t |<L^N_t, phi> - <mu_t, phi>| = " + fmt(oracle_dev[f]) + " <= " + fmt(tol));
  }
}

// ---------------------------------------------------------------- picard

double sample_variance(const EmpiricalMeasure& mu) {
  const double m = mu.mean()[0];
  double ss = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) ss += (mu.point(i)[0] - m) * (mu.point(i)[0] - m);
  return ss / static_cast<double>(mu.size() - 1);
}

void run_picard(const Context& ctx, RunReport& rep) {
  const auto& cfg = ctx.cfg;
  const auto coeffs = models::make_model(cfg.model, cfg.d, cfg.d1, cfg.model_params);
  PicardOptions options;
  options.tol = cfg.tol;
  options.max_iter = cfg.max_iter;
  options.metric.grid_resolution = cfg.grid_resolution;
  options.metric.mode = cfg.d == 1 ? BlMode::kExact : BlMode::kSliced;
  const std::size_t m = ctx.grid.steps();
  std::vector<double> times = cfg.times.empty() ? std::vector<double>{cfg.horizon} : cfg.times;

  const bool moments = cfg.d == 1 && cfg.d1 == 1 && cfg.n >= 2 &&
                       models::conditional_law(cfg.model, cfg.model_params, ctx.initial,
                                               NoiseBundle(ctx.grid, 1, 1, 0, ctx.path(0), 0), 0, false)
                           .has_value();
  const bool discrete = cfg.reference == "discrete";

  Table iters{"picard", {"path", "iteration", "metric"}, {}};
  Table mom{"picard_moments",
            {"path", "t", "mean", "mean_oracle", "mean_se", "variance", "variance_oracle", "variance_se"},
            {}};
  bool all_converged = true;
  std::size_t max_iterations = 0;
  double max_ratio = 0.0;
  bool have_ratio = false;
  double max_fixed_point = 0.0;
  std::vector<std::vector<double>> mean_dev(times.size()), var_dev(times.size());
  std::vector<std::vector<double>> mean_se(times.size()), var_se(times.size());

  for (std::size_t p = 0; p < cfg.paths; ++p) {
    const NoiseBundle noise(ctx.grid, cfg.d1, cfg.d, cfg.n, ctx.path(p), ctx.b_seed);
    const auto x0 = ctx.x0(cfg.n, p);
    const auto res = picard_solve(coeffs, noise, x0, cfg.mass, options);
    rep.particle_steps += static_cast<double>(cfg.n * m * res.iterations);
    all_converged = all_converged && res.converged;
    max_iterations = std::max(max_iterations, res.iterations);
    for (std::size_t j = 0; j < res.metrics.size(); ++j) {
      iters.add({cell(std::uint64_t{p}), cell(std::uint64_t{j + 1}), cell(res.metrics[j])});
      if (j >= 2 && res.metrics[j - 1] > 0.0) {
        max_ratio = std::max(max_ratio, res.metrics[j] / res.metrics[j - 1]);
        have_ratio = true;
      }
    }
    if (res.converged && coeffs.measure_dependent()) {
      const auto again = phi_map(coeffs, res.law, noise, x0, cfg.mass);
      rep.particle_steps += static_cast<double>(cfg.n * m);
      max_fixed_point = std::max(max_fixed_point, trajectory_distance(again, res.law, options.metric));
    }
    if (moments) {
      for (std::size_t ti = 0; ti < times.size(); ++ti) {
        const std::size_t k = ctx.grid.index_of(times[ti]);
        const auto& law = res.law.laws[k];
        const auto g = *models::conditional_law(cfg.model, cfg.model_params, ctx.initial, noise, k, discrete);
        const double mhat = law.mean()[0];
        const double vhat = sample_variance(law);
        const double nn = static_cast<double>(law.size());
        mean_dev[ti].push_back(mhat - g.mean);
        var_dev[ti].push_back(vhat - g.variance);
        mean_se[ti].push_back(std::sqrt(vhat / nn));
        var_se[ti].push_back(vhat * std::sqrt(2.0 / (nn - 1.0)));
        mom.add({cell(std::uint64_t{p}), cell(times[ti]), cell(mhat), cell(g.mean), cell(mean_se[ti].back()),
                 cell(vhat), cell(g.variance), cell(var_se[ti].back())});
      }
    }
  }
  rep.tables.push_back(std::move(iters));
  if (moments) rep.tables.push_back(std::move(mom));

  rep.metric("max_iterations", static_cast<double>(max_iterations), std::nullopt);
  rep.rule("converged", all_converged,
           "every path reached tol " + fmt(cfg.tol) + " within " + std::to_string(cfg.max_iter) +
               " iterations (max used " + std::to_string(max_iterations) + ")");
  if (have_ratio) {
    const double lim = cfg.tolerance("contraction");
    rep.metric("max_contraction_ratio", max_ratio, std::nullopt);
    rep.rule("contraction", max_ratio <= lim, "max ratio after iteration 2 = " + fmt(max_ratio) + " <= " + fmt(lim));
  }
  if (all_converged && coeffs.measure_dependent()) {
    const double lim = cfg.tolerance("fixed_point_factor") * cfg.tol;
    rep.metric("fixed_point_distance", max_fixed_point, std::nullopt);
    rep.rule("fixed_point", max_fixed_point < lim, "d(Phi(mu*), mu*) = " + fmt(max_fixed_point) + " < " + fmt(lim));
  }
  if (moments) {
    const double zlim = cfg.tolerance("z");
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      for (int which = 0; which < 2; ++which) {
        const auto& dev = which == 0 ? mean_dev[ti] : var_dev[ti];
        const auto& se_path = which == 0 ? mean_se[ti] : var_se[ti];
        const double mdev = mean_of(dev);
        // Pooled over paths when possible, else the single path's analytic error.
        const double se = dev.size() >= 2 ? se_of(dev) : se_path[0];
        const double z = se > 0.0 ? mdev / se : (mdev == 0.0 ? 0.0 : INFINITY);
        const std::string name = std::string(which == 0 ? "mean" : "variance") + "_t" + fmt(times[ti]);
        rep.metric(name + "_deviation", mdev, se);
        rep.rule(name, std::abs(z) <= zlim, "|z| = " + fmt(std::abs(z)) + " <= " + fmt(zlim));
      }
    }
  }
}

// ---------------------------------------------------------------- weakcheck

std::vector<double> resolve_levels(const ExperimentConfig& cfg) {
  return cfg.levels.empty() ? std::vector<double>{cfg.dt} : cfg.levels;
}

// Factor by which each level coarsens the finest grid.
std::vector<std::size_t> coarsening(const std::vector<double>& levels, double fine) {
  std::vector<std::size_t> out;
  for (double l : levels) {
    const double r = l / fine;
    const double k = std::round(r);
    if (k < 1.0 || std::abs(r - k) > 1e-9 * r) {
      throw ConfigError("invalid_grid", "time step " + fmt(l) + " is not a multiple of the finest step " + fmt(fine));
    }
    out.push_back(static_cast<std::size_t>(k));
  }
  return out;
}

// Successive ratios mean(a)/mean(b) with delta-method standard errors over paired samples.
std::pair<double, double> paired_ratio(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double ratio = ma / mb;
  std::vector<double> lin(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) lin[i] = (a[i] - ratio * b[i]) / mb;
  return {ratio, se_of(lin)};
}

void run_weakcheck(const Context& ctx, RunReport& rep) {
  const auto& cfg = ctx.cfg;
  const auto coeffs = models::make_model(cfg.model, cfg.d, cfg.d1, cfg.model_params);
  const auto bank = phis(cfg, {"bank"});
  auto levels = resolve_levels(cfg);
  std::sort(levels.begin(), levels.end(), std::greater<>());
  const double fine_dt = levels.back();
  const TimeGrid fine(cfg.horizon, fine_dt);
  const auto factors = coarsening(levels, fine_dt);
  for (double l : levels) TimeGrid(cfg.horizon, l);

  Table table{"weakcheck", {"path", "dt", "phi", "sup_residual", "terminal_residual"}, {}};
  // sup[level][phi][path]
  std::vector<std::vector<std::vector<double>>> sup(levels.size(), std::vector<std::vector<double>>(bank.size()));
  bool mass_exact = true;
  bool has_one = false;
  for (std::size_t p = 0; p < cfg.paths; ++p) {
    const NoiseBundle fine_noise(fine, cfg.d1, cfg.d, cfg.n, ctx.path(p), ctx.b_seed);
    const auto x0 = ctx.x0(cfg.n, p);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const NoiseBundle noise = factors[l] == 1 ? fine_noise : fine_noise.coarsen(factors[l]);
      const auto ens = run_particle_system(coeffs, noise, x0, cfg.mass);
      rep.particle_steps += static_cast<double>(cfg.n * noise.grid().steps());
      const auto law = law_trajectory(ens, noise.grid());
      for (std::size_t f = 0; f < bank.size(); ++f) {
        const auto r = weak_residual(law, coeffs, bank[f], noise);
        sup[l][f].push_back(r.sup);
        if (bank[f].name == "one") {
          has_one = true;
          for (double v : r.values) mass_exact = mass_exact && v == 0.0;
        }
        table.add({cell(std::uint64_t{p}), cell(levels[l]), bank[f].name, cell(r.sup), cell(r.values.back())});
      }
    }
  }
  rep.tables.push_back(std::move(table));
  for (std::size_t l = 0; l < levels.size(); ++l)
    for (std::size_t f = 0; f < bank.size(); ++f)
      rep.metric("mean_sup_residual_" + bank[f].name + "_dt" + fmt(levels[l]), mean_of(sup[l][f]),
                 se_of(sup[l][f]));
  if (has_one) rep.rule("mass_conservation", mass_exact, "R = 0 exactly for phi = 1 in every run");

  if (levels.size() >= 2) {
    // The halving ratio is read off sin when present, else the last non-constant function.
    std::size_t fi = bank.size();
    for (std::size_t f = 0; f < bank.size(); ++f) {
      const std::string& n = bank[f].name;
      if (n == "sin" || n == "sin0") fi = f;
    }
    if (fi == bank.size()) {
      for (std::size_t f = 0; f < bank.size(); ++f)
        if (bank[f].name != "one") fi = f;
    }
    if (fi < bank.size()) {
      const double lo = cfg.tolerance("ratio_lo");
      const double hi = cfg.tolerance("ratio_hi");
      bool ok = true;
      std::string detail = "phi = " + bank[fi].name + ":";
      for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
        const auto [ratio, se] = paired_ratio(sup[l][fi], sup[l + 1][fi]);
        rep.metric("halving_ratio_" + bank[fi].name + "_dt" + fmt(levels[l]), ratio, se);
        ok = ok && ratio >= lo && ratio <= hi;
        detail += " " + fmt(ratio);
      }
      rep.rule("halving_ratio", ok, detail + " in [" + fmt(lo) + ", " + fmt(hi) + "]");
    }
  }
}

// ---------------------------------------------------------------- duality

void run_duality(const Context& ctx, RunReport& rep) {
  const auto& cfg = ctx.cfg;
  const auto coeffs = models::make_model(cfg.model, cfg.d, cfg.d1, cfg.model_params);
  const auto bank = phis(cfg, {"bump"});
  const double t = cfg.horizon;
  const std::size_t kt = ctx.grid.steps();
  const std::size_t m = ctx.grid.steps();
  const std::uint64_t inner_seed = mix_seed(cfg.seed, kSaltInner);
  const std::uint64_t b1 = mix_seed(cfg.seed, kSaltB2);
  const std::uint64_t b2 = mix_seed(cfg.seed, kSaltB3);

  std::vector<LawTrajectory> first, second;
  std::vector<std::vector<DualEvaluation>> duals(bank.size());
  for (std::size_t p = 0; p < cfg.paths; ++p) {
    const auto x0 = ctx.x0(cfg.n, p);
    // The linear equation: coefficients frozen along the particle-system law of this W path.
    const NoiseBundle ref_noise(ctx.grid, cfg.d1, cfg.d, cfg.n, ctx.path(p), ctx.b_seed);
    const auto frozen = law_trajectory(run_particle_system(coeffs, ref_noise, x0, cfg.mass), ctx.grid);
    const NoiseBundle noise1(ctx.grid, cfg.d1, cfg.d, cfg.n, ctx.path(p), b1);
    first.push_back(law_trajectory(run_frozen(coeffs, frozen.laws, noise1, x0, cfg.mass), ctx.grid));
    rep.particle_steps += static_cast<double>(2 * cfg.n * m);
    for (std::size_t f = 0; f < bank.size(); ++f) {
      duals[f].push_back(
          dual_at_atoms(coeffs, frozen, first.back().laws[0], kt, bank[f], noise1, cfg.inner, inner_seed));
      rep.particle_steps += static_cast<double>(cfg.n * cfg.inner * m);
    }
    if (cfg.witness) {
      const NoiseBundle noise2(ctx.grid, cfg.d1, cfg.d, cfg.n, ctx.path(p), b2);
      second.push_back(law_trajectory(run_frozen(coeffs, frozen.laws, noise2, x0, cfg.mass), ctx.grid));
      rep.particle_steps += static_cast<double>(cfg.n * m);
    }
  }

  Table table{"duality", {"path", "phi", "forward", "dual", "dual_se", "gap"}, {}};
  for (std::size_t f = 0; f < bank.size(); ++f) {
    const auto gap = duality_gap(first, duals[f], bank[f], t);
    bool zero_inner = true;
    for (std::size_t p = 0; p < cfg.paths; ++p) {
      const auto pair = duals[f][p].pairing();
      zero_inner = zero_inner && pair.standard_error == 0.0;
      table.add({cell(std::uint64_t{p}), bank[f].name, cell(gap.per_path[p] + pair.value), cell(pair.value),
                 cell(pair.standard_error), cell(gap.per_path[p])});
    }
    rep.metric("duality_gap_" + bank[f].name, gap.gap, gap.standard_error);
    if (zero_inner) {
      // Deterministic characteristics: both sides are exact up to the time discretization.
      const double lim = cfg.tolerance("deterministic_gap_factor") * cfg.dt;
      rep.rule("duality_" + bank[f].name, std::abs(gap.gap) <= lim,
               "zero inner variance; |gap| = " + fmt(std::abs(gap.gap)) + " <= " + fmt(lim));
    } else {
      const double lim = cfg.tolerance("z") * gap.standard_error;
      rep.rule("duality_" + bank[f].name, std::abs(gap.gap) <= lim,
               "|gap| = " + fmt(std::abs(gap.gap)) + " <= " + fmt(cfg.tolerance("z")) + " * " +
                   fmt(gap.standard_error));
    }
  }
  rep.tables.push_back(std::move(table));

  if (cfg.witness) {
    const auto wbank = test_functions::bank(cfg.d);
    const std::vector<double> times = cfg.times.empty() ? std::vector<double>{t} : cfg.times;
    const auto w = uniqueness_witness(first, second, wbank, times);
    Table wt{"witness",
             {"phi", "t", "mean_abs_gap", "mean_gap", "mean_gap_error", "combined_error", "pass"},
             {}};
    double worst = 0.0;
    for (const auto& c : w.cells) {
      wt.add({c.phi, cell(c.t), cell(c.mean_abs_gap), cell(c.mean_gap), cell(c.mean_gap_error),
              cell(c.combined_error), c.pass ? "1" : "0"});
      rep.metric("witness_abs_gap_" + c.phi + "_t" + fmt(c.t), c.mean_abs_gap, c.combined_error);
      if (c.combined_error > 0.0) worst = std::max(worst, c.mean_abs_gap / c.combined_error);
    }
    rep.tables.push_back(std::move(wt));
    rep.rule("uniqueness_witness", w.pass,
             "max E|D| / combined error = " + fmt(worst) + " <= 3 over " + std::to_string(w.cells.size()) + " cells");
  }
}

// ---------------------------------------------------------------- rate

void run_rate(const Context& ctx, RunReport& rep) {
  const auto& cfg = ctx.cfg;
  const auto coeffs = models::make_model(cfg.model, cfg.d, cfg.d1, cfg.model_params);
  const auto phi = phis(cfg, {"sin"}).front();
  RateExperiment ex;
  ex.ns = cfg.ns.empty() ? std::vector<std::size_t>{64, 128, 256, 512, 1024} : cfg.ns;
  ex.paths = cfg.paths;
  ex.t = cfg.times.empty() ? cfg.horizon : cfg.times.back();
  ex.seed = cfg.seed;
  ex.reference_particles = cfg.reference_particles;
  const auto ref = reference_for(ctx, phi, true, true);
  const auto res = convergence_rate(coeffs, ctx.initial, cfg.mass, ctx.grid, phi, ex, ref ? &*ref : nullptr);
  const std::size_t kt = ctx.grid.index_of(ex.t);
  for (std::size_t n : ex.ns) rep.particle_steps += static_cast<double>(n * kt * ex.paths);
  if (!ref) rep.particle_steps += static_cast<double>(ex.reference_particles * kt * ex.paths);

  Table table{"rate", {"N", "error", "error_se"}, {}};
  for (std::size_t c = 0; c < ex.ns.size(); ++c) {
    table.add({cell(std::uint64_t{ex.ns[c]}), cell(res.fit.errors[c]), cell(res.error_se[c])});
    rep.metric("error_N" + std::to_string(ex.ns[c]), res.fit.errors[c], res.error_se[c]);
  }
  rep.tables.push_back(std::move(table));
  rep.metric("slope", res.fit.slope, res.fit.slope_se);
  rep.metric("intercept", res.fit.intercept, std::nullopt);
  const double lo = cfg.tolerance("slope_lo");
  const double hi = cfg.tolerance("slope_hi");
  rep.rule("rate_slope", res.fit.slope >= lo && res.fit.slope <= hi,
           "slope " + fmt(res.fit.slope) + " in [" + fmt(lo) + ", " + fmt(hi) + "]");
}

// ---------------------------------------------------------------- chaos

void run_martingale(const Context& ctx, RunReport& rep) {
  const auto& cfg = ctx.cfg;
  const std::uint64_t w_seed = mix_seed(cfg.seed, kSaltMartingaleW);
  const std::uint64_t b_seed = mix_seed(cfg.seed, kSaltMartingaleB);
  const IntegrandSpec one{"one", [](double, double, double) { return 1.0; }, 1.0};
  const IntegrandSpec sin_w{"sin_w", [](double, double w, double) { return std::sin(w); }, 1.0};
  const IntegrandSpec cos_wb{"cos_w_plus_b", [](double, double w, double b) { return std::cos(w + b); }, 1.0};
  Table table{"martingale", {"rep", "case", "integrand", "estimate", "standard_error", "statistic"}, {}};
  std::size_t within = 0;
  std::size_t within_generic = 0;
  double worst_exact = 0.0;
  for (std::size_t r = 0; r < cfg.martingale_reps; ++r) {
    const NoiseBundle noise(ctx.grid, 1, 1, cfg.martingale_samples, PathId{w_seed, static_cast<std::uint32_t>(r)},
                            b_seed);
    rep.particle_steps += static_cast<double>(cfg.martingale_samples * ctx.grid.steps());
    const auto zb = conditional_martingale_test(one, noise, MartingaleCase::kB);
    const auto ew = conditional_martingale_test(sin_w, noise, MartingaleCase::kW);
    const auto gw = conditional_martingale_test(cos_wb, noise, MartingaleCase::kW);
    if (std::abs(zb.statistic) <= cfg.tolerance("z")) ++within;
    if (std::abs(gw.statistic) <= cfg.tolerance("z")) ++within_generic;
    worst_exact = std::max(worst_exact, std::abs(ew.estimate));
    const auto id = cell(std::uint64_t{r});
    table.add({id, "B", one.name, cell(zb.estimate), cell(zb.standard_error), cell(zb.statistic)});
    table.add({id, "W", sin_w.name, cell(ew.estimate), cell(ew.standard_error), cell(ew.statistic)});
    table.add({id, "W", cos_wb.name, cell(gw.estimate), cell(gw.standard_error), cell(gw.statistic)});
  }
  rep.tables.push_back(std::move(table));
  const double reps = static_cast<double>(cfg.martingale_reps);
  const double frac = within / reps;
  const double frac_generic = within_generic / reps;
  const double need = cfg.tolerance("martingale_fraction");
  rep.metric("martingale_B_fraction_within", frac, std::sqrt(frac * (1.0 - frac) / reps));
  rep.metric("martingale_W_generic_fraction_within", frac_generic,
             std::sqrt(frac_generic * (1.0 - frac_generic) / reps));
  rep.metric("martingale_W_measurable_discrepancy", worst_exact, std::nullopt);
  rep.rule("martingale_B", frac >= need,
           "fraction of |z| <= " + fmt(cfg.tolerance("z")) + " is " + fmt(frac) + " >= " + fmt(need));
  rep.rule("martingale_W_measurable", worst_exact <= cfg.tolerance("martingale_exact"),
           "max |discrepancy| = " + fmt(worst_exact) + " <= " + fmt(cfg.tolerance("martingale_exact")));
}

void run_chaos(const Context& ctx, RunReport& rep) {
  const auto& cfg = ctx.cfg;
  const auto coeffs = models::make_model(cfg.model, cfg.d, cfg.d1, cfg.model_params);
  auto pair = phis(cfg, {"sin", "bump"});
  if (pair.size() == 1) pair.push_back(pair.front());
  if (pair.size() != 2) throw ConfigError("invalid_config", "chaos takes exactly two test functions");
  const std::vector<std::size_t> ns = cfg.ns.empty() ? std::vector<std::size_t>{64, 256, 1024} : cfg.ns;
  const std::size_t n_max = *std::max_element(ns.begin(), ns.end());
  const double t = cfg.times.empty() ? cfg.horizon : cfg.times.back();
  const std::size_t kt = ctx.grid.index_of(t);
  const auto ref1 = reference_for(ctx, pair[0], true, true);
  const auto ref2 = reference_for(ctx, pair[1], true, true);
  const bool closed = ref1 && ref2;
  if (!closed && cfg.reference_particles < 8 * n_max) {
    throw ReferenceQuality("reference run needs at least " + std::to_string(8 * n_max) + " particles");
  }

  // Probability-normalized reference integrals per W path.
  std::vector<double> r1(cfg.paths), r2(cfg.paths);
  for (std::size_t p = 0; p < cfg.paths; ++p) {
    if (closed) {
      const NoiseBundle w_only(ctx.grid, cfg.d1, cfg.d, 0, ctx.path(p), 0);
      r1[p] = (*ref1)(w_only, kt) / cfg.mass;
      r2[p] = (*ref2)(w_only, kt) / cfg.mass;
    } else {
      const std::size_t nr = cfg.reference_particles;
      const NoiseBundle noise(ctx.grid, cfg.d1, cfg.d, nr, ctx.path(p), mix_seed(ctx.b_seed, nr));
      const auto ens = run_particle_system(coeffs, noise, ctx.initial.sample(nr, mix_seed(ctx.x0_seed, nr), p),
                                           cfg.mass);
      rep.particle_steps += static_cast<double>(nr * kt);
      const auto mu = empirical_law(ens, kt);
      r1[p] = integrate(mu, pair[0]) / cfg.mass;
      r2[p] = integrate(mu, pair[1]) / cfg.mass;
    }
  }

  Table table{"chaos", {"N", "path", "pair_average", "reference_product", "gap"}, {}};
  std::vector<double> gaps, ses;
  for (std::size_t n : ns) {
    std::vector<ParticleEnsemble> ensembles;
    for (std::size_t p = 0; p < cfg.paths; ++p) {
      const NoiseBundle noise(ctx.grid, cfg.d1, cfg.d, n, ctx.path(p), mix_seed(ctx.b_seed, n));
      ensembles.push_back(run_particle_system(coeffs, noise, ctx.initial.sample(n, mix_seed(ctx.x0_seed, n), p),
                                              cfg.mass));
      rep.particle_steps += static_cast<double>(n * ctx.grid.steps());
    }
    const auto g = conditional_chaos_gap(ensembles, kt, pair[0], pair[1], r1, r2);
    for (std::size_t p = 0; p < cfg.paths; ++p) {
      table.add({cell(std::uint64_t{n}), cell(std::uint64_t{p}), cell(g.per_path[p] + r1[p] * r2[p]),
                 cell(r1[p] * r2[p]), cell(g.per_path[p])});
    }
    rep.metric("chaos_gap_N" + std::to_string(n), g.gap, g.standard_error);
    gaps.push_back(g.gap);
    ses.push_back(g.standard_error);
  }
  rep.tables.push_back(std::move(table));
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < gaps.size(); ++i) {
    monotone = monotone && gaps[i + 1] <= gaps[i] + 2.0 * std::sqrt(ses[i] * ses[i] + ses[i + 1] * ses[i + 1]);
  }
  std::string detail = "gaps";
  for (double g : gaps) detail += " " + fmt(g);
  rep.rule("chaos_gap_decreasing", monotone, detail + " non-increasing up to 2 combined errors");
  if (cfg.d == 1 && cfg.d1 == 1 && cfg.martingale_reps > 0) run_martingale(ctx, rep);
}

// ---------------------------------------------------------------- stratcheck

void run_stratcheck(const Context& ctx, RunReport& rep) {
  const auto& cfg = ctx.cfg;
  if (cfg.d != 1) throw UnsupportedDimension("stratcheck compares laws with w1_1d and needs d = 1");
  const auto sig = models::make_stratonovich(cfg.model, cfg.d, cfg.d1, cfg.model_params);
  const auto ito = stratonovich_to_ito(sig, true);
  const bool ablate = sig.kernel.has_value();
  const auto ablation = stratonovich_to_ito(sig, false);
  auto levels = resolve_levels(cfg);
  if (cfg.levels.empty()) levels = {cfg.dt, cfg.dt / 2, cfg.dt / 4, cfg.dt / 8};
  std::sort(levels.begin(), levels.end(), std::greater<>());
  const double fine_dt = levels.back();
  const TimeGrid fine(cfg.horizon, fine_dt);
  const auto factors = coarsening(levels, fine_dt);

  Table table{"stratcheck", {"dt", "path", "w1", "w1_without_lions"}, {}};
  std::vector<std::vector<double>> gap(levels.size()), gap_ablation(levels.size());
  bool pathwise_equal = true;
  for (std::size_t p = 0; p < cfg.paths; ++p) {
    const NoiseBundle fine_noise(fine, cfg.d1, cfg.d, cfg.n, ctx.path(p), ctx.b_seed);
    const auto x0 = ctx.x0(cfg.n, p);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const NoiseBundle noise = factors[l] == 1 ? fine_noise : fine_noise.coarsen(factors[l]);
      const std::size_t m = noise.grid().steps();
      const auto strat = run_stratonovich_system(sig, noise, x0, cfg.mass);
      const auto itoe = run_particle_system(ito, noise, x0, cfg.mass);
      rep.particle_steps += static_cast<double>(2 * cfg.n * m);
      const auto a = strat.slice(m);
      const auto b = itoe.slice(m);
      pathwise_equal = pathwise_equal && std::equal(a.begin(), a.end(), b.begin());
      const double g = w1_1d(empirical_law(strat, m), empirical_law(itoe, m));
      gap[l].push_back(g);
      double ga = 0.0;
      if (ablate) {
        const auto abl = run_particle_system(ablation, noise, x0, cfg.mass);
        rep.particle_steps += static_cast<double>(cfg.n * m);
        ga = w1_1d(empirical_law(strat, m), empirical_law(abl, m));
        gap_ablation[l].push_back(ga);
      }
      table.add({cell(levels[l]), cell(std::uint64_t{p}), cell(g), ablate ? cell(ga) : "nan"});
    }
  }
  rep.tables.push_back(std::move(table));

  const double exact = cfg.tolerance("exact_gap");
  const double need = cfg.tolerance("order");
  auto assess = [&](const std::vector<std::vector<double>>& gaps, const std::string& label) {
    std::vector<double> means;
    double worst = 0.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      means.push_back(mean_of(gaps[l]));
      worst = std::max(worst, means.back());
      rep.metric(label + "_w1_dt" + fmt(levels[l]), means.back(), se_of(gaps[l]));
    }
    if (worst <= exact) return std::pair<bool, std::string>{true, "max mean W1 " + fmt(worst) + " <= " + fmt(exact)};
    if (levels.size() < 3 || *std::min_element(means.begin(), means.end()) <= 0.0) {
      return std::pair<bool, std::string>{false, "cannot fit an order (need 3 levels with positive gaps)"};
    }
    const auto fit = fit_rate(levels, means);
    rep.metric(label + "_order", fit.slope, fit.slope_se);
    return std::pair<bool, std::string>{fit.slope >= need, "order " + fmt(fit.slope) + " >= " + fmt(need)};
  };
  rep.metric("pathwise_equal", pathwise_equal ? 1.0 : 0.0, std::nullopt);
  const auto [ok, detail] = assess(gap, "corrected");
  rep.rule("stratonovich_ito_agreement", ok, detail);
  if (ablate) {
    const auto [ok_ablation, detail_ablation] = assess(gap_ablation, "without_lions");
    rep.rule("negative_control_without_lions_fails", !ok_ablation, "ablation must fail (" + detail_ablation + ": " + (ok_ablation ? "holds" : "does not hold") + ")");
    // Paired difference at the finest level: dropping G must leave a visible bias.
    std::vector<double> excess(gap.back().size());
    for (std::size_t p = 0; p < excess.size(); ++p) excess[p] = gap_ablation.back()[p] - gap.back()[p];
    const double z = se_of(excess) > 0.0 ? mean_of(excess) / se_of(excess) : 0.0;
    rep.metric("without_lions_excess_w1", mean_of(excess), se_of(excess));
    rep.rule("without_lions_gap_significant", z > cfg.tolerance("z"),
             "finest-level W1 excess z = " + fmt(z) + " > " + fmt(cfg.tolerance("z")));
  }
}

// ---------------------------------------------------------------- assumptions

void run_assumptions(const Context& ctx, RunReport& rep) {
  const auto& cfg = ctx.cfg;
  const auto coeffs = models::make_model(cfg.model, cfg.d, cfg.d1, cfg.model_params);
  AuditOptions opt;
  opt.probes = cfg.probes;
  opt.seed = cfg.seed;
  opt.horizon = cfg.horizon;
  opt.mass = cfg.mass;
  opt.grid_resolution = std::max<std::size_t>(cfg.grid_resolution, 64);
  const auto a = check_assumptions(coeffs, opt);
  Table table{"assumptions",
              {"probes", "max_a_norm", "max_sigma_norm", "max_b_norm", "declared_bound", "max_asymmetry",
               "min_parabolic_eigenvalue", "lipschitz_x_quotient", "lipschitz_mu_quotient", "declared_lipschitz",
               "violations"},
              {}};
  table.add({cell(std::uint64_t{a.probes}), cell(a.max_a_norm), cell(a.max_sigma_norm), cell(a.max_b_norm),
             cell(a.declared_bound), cell(a.max_asymmetry), cell(a.min_parabolic_eigenvalue),
             cell(a.lipschitz_x_quotient), cell(a.lipschitz_mu_quotient), cell(a.declared_lipschitz),
             cell(std::uint64_t{a.violations.size()})});
  rep.tables.push_back(std::move(table));
  rep.metric("max_a_norm", a.max_a_norm, std::nullopt);
  rep.metric("max_sigma_norm", a.max_sigma_norm, std::nullopt);
  rep.metric("max_b_norm", a.max_b_norm, std::nullopt);
  rep.metric("max_asymmetry", a.max_asymmetry, std::nullopt);
  rep.metric("min_parabolic_eigenvalue", a.min_parabolic_eigenvalue, std::nullopt);
  rep.metric("lipschitz_x_quotient", a.lipschitz_x_quotient, std::nullopt);
  rep.metric("lipschitz_mu_quotient", a.lipschitz_mu_quotient, std::nullopt);
  std::string detail = a.clean() ? "no violations" : "";
  for (const auto& v : a.violations) detail += (detail.empty() ? "" : "; ") + v;
  rep.rule("assumptions_clean", a.clean(), detail);
}

// ---------------------------------------------------------------- config

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t{
      {"translation", 1e-12},       {"z", 3.0},          {"contraction", 0.9},     {"fixed_point_factor", 2.0},
      {"ratio_lo", 1.4},            {"ratio_hi", 3.0},   {"slope_lo", -0.65},      {"slope_hi", -0.35},
      {"order", 0.5},               {"exact_gap", 1e-12}, {"deterministic_gap_factor", 5.0},
      {"martingale_fraction", 0.99}, {"martingale_exact", 1e-12},
  };
  return t;
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  auto negative = [](const json& e) { return e.is_number() && !e.is_number_unsigned() && e.get<double>() < 0.0; };
  if constexpr (std::is_unsigned_v<T>) {
    if (negative(v)) throw ConfigError("invalid_config", std::string("field '") + key + "' must be non-negative");
  } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
    if (v.is_array() && std::any_of(v.begin(), v.end(), negative)) {
      throw ConfigError("invalid_config", std::string("field '") + key + "' must be non-negative");
    }
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("invalid_config", std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"simulate", "picard",     "weakcheck",  "duality",
                                          "rate",     "chaos",      "stratcheck", "assumptions"};
  return k;
}

double ExperimentConfig::tolerance(const std::string& key) const {
  if (auto it = tolerances.find(key); it != tolerances.end()) return it->second;
  if (auto it = default_tolerances().find(key); it != default_tolerances().end()) return it->second;
  throw InvalidArgument("unknown tolerance '" + key + "'");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("invalid_config", "config must be a JSON object");
  static const std::set<std::string> known{
      "kind",  "model",     "initial", "d",         "d1",       "N",          "dt",
      "T",     "r",         "seed",    "paths",     "inner",    "phi",        "times",
      "ns",    "levels",    "tol",     "max_iter",  "grid_resolution",        "reference",
      "reference_particles", "probes", "martingale_reps",       "martingale_samples",
      "witness", "tolerances", "output"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("invalid_config", "unknown config field '" + key + "'");
  }
  ExperimentConfig c;
  c.kind = get<std::string>(j, "kind", c.kind);
  if (std::find(experiment_kinds().begin(), experiment_kinds().end(), c.kind) == experiment_kinds().end()) {
    throw ConfigError("invalid_config", "unknown experiment kind '" + c.kind + "'");
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.is_string()) {
      c.model = m.get<std::string>();
    } else if (m.is_object()) {
      c.model = get<std::string>(m, "name", c.model);
      if (m.contains("params")) c.model_params = m.at("params");
      for (const auto& [key, value] : m.items())
        if (key != "name" && key != "params") throw ConfigError("invalid_config", "unknown model field '" + key + "'");
    } else {
      throw ConfigError("invalid_config", "model must be a name or an object");
    }
  }
  if (std::find(models::names().begin(), models::names().end(), c.model) == models::names().end()) {
    throw ConfigError("unknown_model", "unknown model '" + c.model + "'");
  }
  if (!c.model_params.is_object()) throw ConfigError("invalid_config", "model params must be an object");
  c.d = get<std::size_t>(j, "d", c.d);
  c.d1 = get<std::size_t>(j, "d1", c.d1);
  c.initial = j.contains("initial") ? j.at("initial") : json{{"law", "gaussian"}, {"mean", std::vector<double>(c.d, 0.0)}, {"std", 1.0}};
  c.n = get<std::size_t>(j, "N", c.n);
  c.dt = get<double>(j, "dt", c.dt);
  c.horizon = get<double>(j, "T", c.horizon);
  c.mass = get<double>(j, "r", c.mass);
  c.seed = get<std::uint64_t>(j, "seed", c.seed);
  c.paths = get<std::size_t>(j, "paths", c.paths);
  c.inner = get<std::size_t>(j, "inner", c.inner);
  c.phi = get<std::vector<std::string>>(j, "phi", c.phi);
  c.times = get<std::vector<double>>(j, "times", c.times);
  c.ns = get<std::vector<std::size_t>>(j, "ns", c.ns);
  c.levels = get<std::vector<double>>(j, "levels", c.levels);
  c.tol = get<double>(j, "tol", c.tol);
  c.max_iter = get<std::size_t>(j, "max_iter", c.max_iter);
  c.grid_resolution = get<std::size_t>(j, "grid_resolution", c.grid_resolution);
  c.reference = get<std::string>(j, "reference", c.reference);
  c.reference_particles = get<std::size_t>(j, "reference_particles", c.reference_particles);
  c.probes = get<std::size_t>(j, "probes", c.probes);
  c.martingale_reps = get<std::size_t>(j, "martingale_reps", c.martingale_reps);
  c.martingale_samples = get<std::size_t>(j, "martingale_samples", c.martingale_samples);
  c.witness = get<bool>(j, "witness", c.witness);
  c.tolerances = get<std::map<std::string, double>>(j, "tolerances", c.tolerances);
  c.output = get<std::string>(j, "output", c.output);

  // Validation: grid first so a bad dt is reported as a grid problem.
  TimeGrid grid(c.horizon, c.dt);
  for (double l : c.levels) TimeGrid(c.horizon, l);
  for (double t : c.times) grid.index_of(t);
  if (c.n < 1) throw ConfigError("invalid_config", "N must be at least 1");
  if (!(c.mass > 0.0) || !std::isfinite(c.mass)) throw ConfigError("invalid_config", "r must be positive");
  if (c.d < 1 || c.d > kMaxDim || c.d1 < 1 || c.d1 > kMaxDim) {
    throw ConfigError("invalid_config", "d and d1 must lie in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (c.paths < 1) throw ConfigError("invalid_config", "paths must be at least 1");
  if (!(c.tol > 0.0)) throw ConfigError("invalid_config", "tol must be positive");
  if (c.max_iter < 1) throw ConfigError("invalid_config", "max_iter must be at least 1");
  if (c.grid_resolution < 1) throw ConfigError("invalid_config", "grid_resolution must be positive");
  if (c.kind == "duality" && c.inner < 2) throw ConfigError("invalid_config", "inner must be at least 2");
  static const std::set<std::string> refs{"auto", "closed_form", "discrete", "run"};
  if (!refs.count(c.reference)) throw ConfigError("invalid_config", "reference must be auto, closed_form, discrete or run");
  for (const auto& [key, value] : c.tolerances) {
    if (!default_tolerances().count(key) && key != "oracle") {
      throw ConfigError("invalid_config", "unknown tolerance '" + key + "'");
    }
  }
  make_initial(c.initial, c.d);
  return c;
}

json ExperimentConfig::to_json() const {
  json tols = json::object();
  for (const auto& [k, v] : default_tolerances()) tols[k] = v;
  for (const auto& [k, v] : tolerances) tols[k] = v;
  return json{{"kind", kind},
              {"model", {{"name", model}, {"params", model_params}}},
              {"initial", initial},
              {"d", d},
              {"d1", d1},
              {"N", n},
              {"dt", dt},
              {"T", horizon},
              {"r", mass},
              {"seed", seed},
              {"paths", paths},
              {"inner", inner},
              {"phi", phi},
              {"times", times},
              {"ns", ns},
              {"levels", levels},
              {"tol", tol},
              {"max_iter", max_iter},
              {"grid_resolution", grid_resolution},
              {"reference", reference},
              {"reference_particles", reference_particles},
              {"probes", probes},
              {"martingale_reps", martingale_reps},
              {"martingale_samples", martingale_samples},
              {"witness", witness},
              {"tolerances", tols},
              {"output", output}};
}

RunReport run(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.kind = cfg.kind;
  rep.config = cfg.to_json();
  const Context ctx(cfg);
  if (cfg.kind == "simulate") {
    run_simulate(ctx, rep);
  } else if (cfg.kind == "picard") {
    run_picard(ctx, rep);
  } else if (cfg.kind == "weakcheck") {
    run_weakcheck(ctx, rep);
  } else if (cfg.kind == "duality") {
    run_duality(ctx, rep);
  } else if (cfg.kind == "rate") {
    run_rate(ctx, rep);
  } else if (cfg.kind == "chaos") {
    run_chaos(ctx, rep);
  } else if (cfg.kind == "stratcheck") {
    run_stratcheck(ctx, rep);
  } else if (cfg.kind == "assumptions") {
    run_assumptions(ctx, rep);
  } else {
    throw ConfigError("invalid_config", "unknown experiment kind '" + cfg.kind + "'");
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace mfsim
