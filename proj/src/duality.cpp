#include "mfsim/duality.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "mfsim/errors.hpp"
#include "mfsim/parallel.hpp"
#include "mfsim/rng.hpp"
#include "mfsim/simulate.hpp"

namespace mfsim {
namespace {

// Per-step snapshots and (when state independent) alpha along the frozen law.
struct FrozenSteps {
  std::vector<std::unique_ptr<const CoefficientSnapshot>> snaps;
  std::vector<std::optional<SmallMatrix>> alphas;
};

FrozenSteps prepare(const CoefficientSet& coeffs, const LawTrajectory& frozen, const NoiseBundle& noise,
                    std::size_t s_index, std::size_t t_index, std::span<const double> x_probe) {
  if (!(frozen.grid == noise.grid()) || frozen.laws.size() != noise.grid().steps() + 1) {
    throw IncompatibleTrajectory("frozen law and noise use different grids");
  }
  if (!(frozen.path == noise.path_id())) throw ConditioningMismatch("frozen law is conditioned on another W path");
  if (s_index > t_index || t_index > noise.grid().steps()) throw InvalidArgument("need s <= t on the grid");
  FrozenSteps out;
  for (std::size_t k = s_index; k < t_index; ++k) {
    out.snaps.push_back(coeffs.snapshot(noise.grid().time(k), frozen.laws[k]));
    out.alphas.push_back(fixed_alpha(*out.snaps.back(), coeffs.dim_x(), coeffs.dim_w(), noise.grid().time(k), x_probe));
  }
  return out;
}

// Mean and standard error of phi(X_t^{s,x}) over n_inner inner paths.
Estimate inner_average(const CoefficientSet& coeffs, const FrozenSteps& steps, const NoiseBundle& noise,
                       std::size_t s_index, std::span<const double> x, const TestFunction& phi, std::size_t n_inner,
                       std::uint64_t inner_seed, std::uint64_t first_sample) {
  const std::size_t d = coeffs.dim_x();
  const std::size_t d1 = coeffs.dim_w();
  const std::size_t m = steps.snaps.size();
  const double dt = noise.grid().dt();
  const double scale = std::sqrt(dt);
  std::vector<double> db(m * d);
  std::vector<double> cur(x.begin(), x.end()), nxt(d);
  // Welford: identical samples give exactly zero variance.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t j = 0; j < n_inner; ++j) {
    CounterStream(inner_seed, StreamRole::kInner, noise.path_id().path, first_sample + j).normals(0, db);
    for (double& v : db) v *= scale;
    std::copy(x.begin(), x.end(), cur.begin());
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t step = s_index + k;
      euler_update(*steps.snaps[k], d, d1, noise.grid().time(step), dt, cur, noise.dw(step),
                   std::span<const double>(db).subspan(k * d, d), steps.alphas[k] ? &*steps.alphas[k] : nullptr, nxt);
      cur.swap(nxt);
    }
    const double v = phi.value(cur);
    if (!std::isfinite(v)) throw EvaluationError("terminal function '" + phi.name + "' is not finite", cur);
    const double delta = v - mean;
    mean += delta / static_cast<double>(j + 1);
    m2 += delta * (v - mean);
  }
  const double n = static_cast<double>(n_inner);
  return {mean, std::sqrt(m2 / (n - 1.0) / n)};
}

}  // namespace

Estimate feynman_kac_f(const CoefficientSet& coeffs, const LawTrajectory& frozen, std::span<const double> x,
                       std::size_t s_index, std::size_t t_index, const TestFunction& phi, const NoiseBundle& noise,
                       std::size_t n_inner, std::uint64_t inner_seed) {
  if (n_inner < 2) throw InsufficientSamples("feynman_kac_f needs at least 2 inner samples");
  if (x.size() != coeffs.dim_x()) throw InvalidArgument("query point has the wrong dimension");
  const auto steps = prepare(coeffs, frozen, noise, s_index, t_index, x);
  return inner_average(coeffs, steps, noise, s_index, x, phi, n_inner, inner_seed, 0);
}

Estimate DualEvaluation::pairing() const {
  double value = 0.0;
  double var = 0.0;
  for (std::size_t q = 0; q < mu0.size(); ++q) {
    value += mu0.weight(q) * f0[q].value;
    var += mu0.weight(q) * mu0.weight(q) * f0[q].standard_error * f0[q].standard_error;
  }
  return {value, std::sqrt(var)};
}

DualEvaluation dual_at_atoms(const CoefficientSet& coeffs, const LawTrajectory& frozen, const EmpiricalMeasure& mu0,
                             std::size_t t_index, const TestFunction& phi, const NoiseBundle& noise,
                             std::size_t n_inner, std::uint64_t inner_seed) {
  if (n_inner < 2) throw InsufficientSamples("dual evaluation needs at least 2 inner samples");
  if (mu0.dim() != coeffs.dim_x()) throw InvalidArgument("mu0 has the wrong dimension");
  const auto steps = prepare(coeffs, frozen, noise, 0, t_index, mu0.point(0));
  DualEvaluation out{phi.name, noise.grid().time(t_index), mu0, std::vector<Estimate>(mu0.size()), noise.path_id()};
  parallel_for(mu0.size(), [&](std::size_t q) {
    out.f0[q] = inner_average(coeffs, steps, noise, 0, mu0.point(q), phi, n_inner, inner_seed,
                              static_cast<std::uint64_t>(q) * n_inner);
  });
  return out;
}

DualityGap duality_gap(std::span<const LawTrajectory> forward, std::span<const DualEvaluation> dual,
                       const TestFunction& phi, double t) {
  if (forward.empty() || forward.size() != dual.size()) {
    throw ConditioningMismatch("forward and dual sets must cover the same, non-empty, set of W paths");
  }
  DualityGap out;
  const std::size_t m = forward.size();
  for (std::size_t p = 0; p < m; ++p) {
    if (!(forward[p].path == dual[p].path)) {
      throw ConditioningMismatch("forward law " + std::to_string(p) + " and its dual evaluation use different W paths");
    }
    if (dual[p].phi != phi.name) throw InvalidArgument("dual evaluation was computed for another test function");
    if (std::abs(dual[p].t - t) > 1e-9 * std::max(1.0, t)) {
      throw InvalidArgument("dual evaluation was computed for another terminal time");
    }
    const std::size_t k = forward[p].grid.index_of(t);
    const auto pair = dual[p].pairing();
    out.per_path.push_back(integrate(forward[p].laws[k], phi) - pair.value);
    out.inner_standard_error.push_back(pair.standard_error);
  }
  double sum = 0.0;
  for (double g : out.per_path) sum += g;
  out.gap = sum / static_cast<double>(m);
  if (m >= 2) {
    double ss = 0.0;
    for (double g : out.per_path) ss += (g - out.gap) * (g - out.gap);
    out.standard_error = std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
  } else {
    out.standard_error = out.inner_standard_error[0];
  }
  return out;
}

WitnessReport uniqueness_witness(std::span<const LawTrajectory> first, std::span<const LawTrajectory> second,
                                 std::span<const TestFunction> bank, std::span<const double> times) {
  if (first.empty() || first.size() != second.size()) {
    throw ConditioningMismatch("both estimators must cover the same, non-empty, set of W paths");
  }
  for (std::size_t p = 0; p < first.size(); ++p) {
    if (!(first[p].path == second[p].path)) throw ConditioningMismatch("estimators use different W paths");
  }
  WitnessReport report;
  const std::size_t m = first.size();
  for (const auto& phi : bank) {
    for (double t : times) {
      WitnessCell cell;
      cell.phi = phi.name;
      cell.t = t;
      std::vector<double> diffs(m);
      double var_sum = 0.0;
      double rounding = 0.0;
      bool all_zero = true;
      for (std::size_t p = 0; p < m; ++p) {
        const auto& mu1 = first[p].laws[first[p].grid.index_of(t)];
        const auto& mu2 = second[p].laws[second[p].grid.index_of(t)];
        const auto e1 = integrate_with_error(mu1, phi);
        const auto e2 = integrate_with_error(mu2, phi);
        diffs[p] = e1.value - e2.value;
        all_zero = all_zero && diffs[p] == 0.0;
        var_sum += e1.standard_error * e1.standard_error + e2.standard_error * e2.standard_error;
        rounding = std::max(rounding, 1e-12 * (std::abs(e1.value) + std::abs(e2.value)));
      }
      double sum = 0.0;
      double sum_abs = 0.0;
      for (double v : diffs) {
        sum += v;
        sum_abs += std::abs(v);
      }
      cell.mean_gap = sum / static_cast<double>(m);
      cell.mean_abs_gap = sum_abs / static_cast<double>(m);
      if (m >= 2) {
        double ss = 0.0;
        for (double v : diffs) ss += (v - cell.mean_gap) * (v - cell.mean_gap);
        cell.mean_gap_error = std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
      }
      cell.combined_error = std::sqrt(var_sum / static_cast<double>(m));
      cell.pass = all_zero || cell.mean_abs_gap <= 3.0 * cell.combined_error + rounding;
      report.pass = report.pass && cell.pass;
      report.cells.push_back(cell);
    }
  }
  return report;
}

}  // namespace mfsim
