#include "mfsim/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "mfsim/errors.hpp"
#include "mfsim/rng.hpp"

namespace mfsim {
namespace {

std::uint64_t cell_seed(std::uint64_t seed, std::size_t n, std::uint64_t salt) {
  return mix_seed(mix_seed(seed, salt), static_cast<std::uint64_t>(n));
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double se_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

RateFit fit_rate(std::span<const double> ns, std::span<const double> errors) {
  if (ns.size() != errors.size()) throw InvalidArgument("fit_rate: ns and errors differ in length");
  const std::set<double> distinct(ns.begin(), ns.end());
  if (distinct.size() < 3) throw InvalidArgument("fit_rate: need at least 3 distinct sample sizes");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(ns[i] > 0.0) || !(errors[i] > 0.0) || !std::isfinite(errors[i])) {
      throw InvalidArgument("fit_rate: sample sizes and errors must be positive");
    }
  }
  const std::size_t n = ns.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::log(ns[i]);
    y[i] = std::log(errors[i]);
  }
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  RateFit fit;
  fit.ns.assign(ns.begin(), ns.end());
  fit.errors.assign(errors.begin(), errors.end());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += r * r;
  }
  fit.slope_se = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx) : 0.0;
  return fit;
}

RateResult convergence_rate(const CoefficientSet& coeffs, const InitialLaw& initial, double mass,
                            const TimeGrid& grid, const TestFunction& phi, const RateExperiment& experiment,
                            const ReferenceFunctional* closed_form) {
  if (experiment.ns.empty() || experiment.paths == 0) throw InvalidArgument("convergence_rate: empty experiment");
  const std::size_t n_max = *std::max_element(experiment.ns.begin(), experiment.ns.end());
  if (!closed_form && experiment.reference_particles < 8 * n_max) {
    throw ReferenceQuality("reference run needs at least " + std::to_string(8 * n_max) + " particles, got " +
                           std::to_string(experiment.reference_particles));
  }
  const std::size_t k = grid.index_of(experiment.t);
  const std::size_t d = coeffs.dim_x();
  const std::uint64_t w_seed = mix_seed(experiment.seed, 1);

  RateResult result;
  result.abs_errors.assign(experiment.ns.size(), std::vector<double>(experiment.paths));
  for (std::size_t p = 0; p < experiment.paths; ++p) {
    const PathId path{w_seed, static_cast<std::uint32_t>(p)};
    double reference = 0.0;
    if (closed_form) {
      const NoiseBundle w_only(grid, coeffs.dim_w(), d, 0, path, 0);
      reference = (*closed_form)(w_only, k);
    } else {
      const std::size_t nr = experiment.reference_particles;
      const NoiseBundle noise(grid, coeffs.dim_w(), d, nr, path, cell_seed(experiment.seed, nr, 0xB0));
      const auto x0 = initial.sample(nr, cell_seed(experiment.seed, nr, 0x10), path.path);
      const auto ens = run_particle_system(coeffs, noise, x0, mass);
      reference = integrate(empirical_law(ens, k), phi);
    }
    for (std::size_t c = 0; c < experiment.ns.size(); ++c) {
      const std::size_t n = experiment.ns[c];
      const NoiseBundle noise(grid, coeffs.dim_w(), d, n, path, cell_seed(experiment.seed, n, 2));
      const auto x0 = initial.sample(n, cell_seed(experiment.seed, n, 3), path.path);
      const auto ens = run_particle_system(coeffs, noise, x0, mass);
      result.abs_errors[c][p] = std::abs(integrate(empirical_law(ens, k), phi) - reference);
    }
  }
  std::vector<double> ns, errors;
  for (std::size_t c = 0; c < experiment.ns.size(); ++c) {
    ns.push_back(static_cast<double>(experiment.ns[c]));
    errors.push_back(mean_of(result.abs_errors[c]));
    result.error_se.push_back(se_of(result.abs_errors[c]));
  }
  result.fit = fit_rate(ns, errors);
  return result;
}

double pair_average(const ParticleEnsemble& ensemble, std::size_t t_index, const TestFunction& phi1,
                    const TestFunction& phi2) {
  const std::size_t n = ensemble.particles();
  if (n < 2) throw InvalidArgument("conditional chaos needs N >= 2");
  if (t_index > ensemble.steps()) throw InvalidArgument("time index outside the grid");
  double s1 = 0.0;
  double s2 = 0.0;
  double diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = ensemble.position(i, t_index);
    const double a = phi1.value(x);
    const double b = phi2.value(x);
    s1 += a;
    s2 += b;
    diag += a * b;
  }
  const double nn = static_cast<double>(n);
  return (s1 * s2 - diag) / (nn * (nn - 1.0));
}

ChaosGap conditional_chaos_gap(std::span<const ParticleEnsemble> ensembles, std::size_t t_index,
                               const TestFunction& phi1, const TestFunction& phi2,
                               std::span<const double> reference1, std::span<const double> reference2) {
  if (ensembles.empty() || reference1.size() != ensembles.size() || reference2.size() != ensembles.size()) {
    throw InvalidArgument("conditional_chaos_gap: one reference pair per ensemble required");
  }
  ChaosGap out;
  std::vector<double> abs_gaps;
  for (std::size_t p = 0; p < ensembles.size(); ++p) {
    const double g = pair_average(ensembles[p], t_index, phi1, phi2) - reference1[p] * reference2[p];
    out.per_path.push_back(g);
    abs_gaps.push_back(std::abs(g));
  }
  out.gap = mean_of(abs_gaps);
  out.standard_error = se_of(abs_gaps);
  return out;
}

MartingaleTest conditional_martingale_test(const IntegrandSpec& y, const NoiseBundle& noise, MartingaleCase which) {
  if (noise.dim_w() != 1 || noise.dim_b() != 1) throw UnsupportedDimension("martingale tests use d = d1 = 1");
  const std::size_t n = noise.particles();
  const std::size_t m = noise.grid().steps();
  if (which == MartingaleCase::kB ? n < 2 : n < 4) {
    throw InsufficientSamples("conditional martingale test needs more idiosyncratic paths");
  }
  auto eval = [&](std::size_t j, double w, double b) {
    const double v = y.value(noise.grid().time(j), w, b);
    if (!(std::abs(v) <= y.bound)) {
      throw AssumptionViolation("integrand '" + y.name + "' has |Y| = " + std::to_string(std::abs(v)) +
                                " above its bound " + std::to_string(y.bound));
    }
    return v;
  };

  MartingaleTest out;
  if (which == MartingaleCase::kB) {
    std::vector<double> integrals(n);
    for (std::size_t i = 0; i < n; ++i) {
      double w = 0.0;
      double b = 0.0;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double db = noise.db(i, j)[0];
        acc += eval(j, w, b) * db;
        w += noise.dw(j)[0];
        b += db;
      }
      integrals[i] = acc;
    }
    out.estimate = mean_of(integrals);
    out.standard_error = se_of(integrals);
  } else {
    const std::size_t half = n / 2;
    std::vector<double> lhs(half);
    std::vector<double> y_mean(m, 0.0);
    // Second half: averaged integrand and, per path, sum_j Y_j dW_j for the error bar.
    std::vector<double> rhs_paths(n - half);
    for (std::size_t i = 0; i < n; ++i) {
      double w = 0.0;
      double b = 0.0;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double v = eval(j, w, b);
        const double dw = noise.dw(j)[0];
        acc += v * dw;
        if (i >= half) y_mean[j] += v;
        w += dw;
        b += noise.db(i, j)[0];
      }
      if (i < half) {
        lhs[i] = acc;
      } else {
        rhs_paths[i - half] = acc;
      }
    }
    double rhs = 0.0;
    for (std::size_t j = 0; j < m; ++j) rhs += y_mean[j] / static_cast<double>(n - half) * noise.dw(j)[0];
    out.estimate = mean_of(lhs) - rhs;
    const double se1 = se_of(lhs);
    const double se2 = se_of(rhs_paths);
    out.standard_error = std::sqrt(se1 * se1 + se2 * se2);
  }
  if (out.standard_error > 0.0) {
    out.statistic = out.estimate / out.standard_error;
  } else {
    out.statistic = out.estimate == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), out.estimate);
  }
  return out;
}

}  // namespace mfsim
