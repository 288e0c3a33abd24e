#include "mfsim/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mfsim/errors.hpp"
#include "mfsim/rng.hpp"

namespace mfsim {
namespace {

std::string format_point(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

// Signed atoms (mu with +, nu with -) on the line, merged and sorted.
struct SignedAtom {
  double x;
  double w;
};

std::vector<SignedAtom> signed_difference(std::span<const double> xs_mu, std::span<const double> ws_mu,
                                          std::span<const double> xs_nu, std::span<const double> ws_nu) {
  std::vector<SignedAtom> atoms;
  atoms.reserve(xs_mu.size() + xs_nu.size());
  for (std::size_t i = 0; i < xs_mu.size(); ++i) atoms.push_back({xs_mu[i], ws_mu[i]});
  for (std::size_t i = 0; i < xs_nu.size(); ++i) atoms.push_back({xs_nu[i], -ws_nu[i]});
  std::sort(atoms.begin(), atoms.end(), [](const SignedAtom& a, const SignedAtom& b) { return a.x < b.x; });
  std::vector<SignedAtom> merged;
  merged.reserve(atoms.size());
  for (const auto& a : atoms) {
    if (!merged.empty() && merged.back().x == a.x) {
      merged.back().w += a.w;
    } else {
      merged.push_back(a);
    }
  }
  return merged;
}

// Exact maximum of sum_g c_g phi_g over node values phi_g = k_g / K with
// |k_g| <= K and |k_{g+1} - k_g| <= 1.
double chain_dp(std::span<const double> c, std::size_t resolution) {
  const auto K = static_cast<std::ptrdiff_t>(resolution);
  const std::size_t states = 2 * resolution + 1;
  std::vector<double> value(states), next(states);
  for (std::size_t s = 0; s < states; ++s) value[s] = c[0] * static_cast<double>(static_cast<std::ptrdiff_t>(s) - K);
  for (std::size_t g = 1; g < c.size(); ++g) {
    const double cg = c[g];
    for (std::size_t s = 0; s < states; ++s) {
      double best = value[s];
      if (s > 0) best = std::max(best, value[s - 1]);
      if (s + 1 < states) best = std::max(best, value[s + 1]);
      next[s] = best + cg * static_cast<double>(static_cast<std::ptrdiff_t>(s) - K);
    }
    value.swap(next);
  }
  return *std::max_element(value.begin(), value.end()) / static_cast<double>(resolution);
}

double bl_distance_line(std::span<const double> xs_mu, std::span<const double> ws_mu,
                        std::span<const double> xs_nu, std::span<const double> ws_nu,
                        std::size_t resolution) {
  const auto atoms = signed_difference(xs_mu, ws_mu, xs_nu, ws_nu);
  const double lo = std::floor(atoms.front().x - 1.0);
  const double hi = std::ceil(atoms.back().x + 1.0);
  const auto K = static_cast<double>(resolution);
  const auto nodes = static_cast<std::size_t>(std::llround((hi - lo) * K)) + 1;
  std::vector<double> c(nodes, 0.0);
  for (const auto& a : atoms) {
    const double s = (a.x - lo) * K;
    auto g = static_cast<std::size_t>(std::floor(s));
    if (g >= nodes - 1) g = nodes - 2;
    const double frac = s - static_cast<double>(g);
    c[g] += a.w * (1.0 - frac);
    c[g + 1] += a.w * frac;
  }
  return std::max(0.0, chain_dp(c, resolution));
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::size_t dim, std::vector<double> points, std::vector<double> weights)
    : dim_(dim), points_(std::move(points)), weights_(std::move(weights)) {
  if (dim_ == 0) throw InvalidMeasure("measure dimension must be positive");
  if (weights_.empty()) throw InvalidMeasure("measure needs at least one atom");
  if (points_.size() != weights_.size() * dim_) {
    throw InvalidMeasure("points and weights have inconsistent lengths");
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) {
      throw InvalidMeasure("weight " + std::to_string(i) + " is negative or not finite");
    }
  }
  for (double x : points_) {
    if (!std::isfinite(x)) throw InvalidMeasure("atom location is not finite");
  }
  mass_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (!(mass_ > 0.0)) throw InvalidMeasure("total mass must be positive");

  mean_.assign(dim_, 0.0);
  for (std::size_t i = 0; i < weights_.size(); ++i)
    for (std::size_t k = 0; k < dim_; ++k) mean_[k] += weights_[i] * points_[i * dim_ + k];
  for (double& m : mean_) m /= mass_;
}

EmpiricalMeasure EmpiricalMeasure::uniform(std::size_t dim, std::vector<double> points, double mass) {
  if (dim == 0 || points.size() % dim != 0) throw InvalidMeasure("point array not divisible by dimension");
  const std::size_t n = points.size() / dim;
  if (n == 0) throw InvalidMeasure("measure needs at least one atom");
  return EmpiricalMeasure(dim, std::move(points), std::vector<double>(n, mass / static_cast<double>(n)));
}

EmpiricalMeasure EmpiricalMeasure::dirac(std::span<const double> location, double mass) {
  return EmpiricalMeasure(location.size(), std::vector<double>(location.begin(), location.end()), {mass});
}

EmpiricalMeasure EmpiricalMeasure::canonical() const {
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto pa = point(a);
    const auto pb = point(b);
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
  });
  std::vector<double> pts;
  std::vector<double> ws;
  pts.reserve(points_.size());
  ws.reserve(size());
  for (std::size_t idx : order) {
    const auto p = point(idx);
    const bool same = !ws.empty() && std::equal(p.begin(), p.end(), pts.end() - static_cast<std::ptrdiff_t>(dim_));
    if (same) {
      ws.back() += weights_[idx];
    } else {
      pts.insert(pts.end(), p.begin(), p.end());
      ws.push_back(weights_[idx]);
    }
  }
  std::vector<double> kept_pts;
  std::vector<double> kept_ws;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (ws[i] > 0.0) {
      kept_pts.insert(kept_pts.end(), pts.begin() + static_cast<std::ptrdiff_t>(i * dim_),
                      pts.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
      kept_ws.push_back(ws[i]);
    }
  }
  return EmpiricalMeasure(dim_, std::move(kept_pts), std::move(kept_ws));
}

EmpiricalMeasure EmpiricalMeasure::scaled(double factor) const {
  std::vector<double> ws(weights_);
  for (double& w : ws) w *= factor;
  return EmpiricalMeasure(dim_, points_, std::move(ws));
}

double integrate(const EmpiricalMeasure& mu, const TestFunction& phi) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double v = phi.value(mu.point(i));
    if (!std::isfinite(v)) {
      const auto p = mu.point(i);
      throw EvaluationError("test function '" + phi.name + "' is not finite at " + format_point(p),
                            std::vector<double>(p.begin(), p.end()));
    }
    acc += mu.weight(i) * v;
  }
  return acc;
}

Estimate integrate_with_error(const EmpiricalMeasure& mu, const TestFunction& phi) {
  const double value = integrate(mu, phi);
  const std::size_t n = mu.size();
  if (n < 2) return {value, 0.0};
  const double m = mu.mass();
  const double mean = value / m;
  double var = 0.0;
  double sum_w2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = mu.weight(i) / m;
    const double dv = phi.value(mu.point(i)) - mean;
    var += p * dv * dv;
    sum_w2 += p * p;
  }
  // Effective sample size n_eff = 1 / sum p_i^2; unbiased variance correction.
  const double n_eff = 1.0 / sum_w2;
  if (n_eff <= 1.0) return {value, 0.0};
  const double sample_var = var * n_eff / (n_eff - 1.0);
  return {value, m * std::sqrt(sample_var / n_eff)};
}

double bl_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t grid_resolution) {
  BlOptions options;
  options.grid_resolution = grid_resolution;
  return bl_distance(mu, nu, options);
}

double bl_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const BlOptions& options) {
  if (mu.dim() != nu.dim()) throw InvalidArgument("bl_distance: dimension mismatch");
  if (options.grid_resolution == 0) throw InvalidArgument("bl_distance: grid_resolution must be positive");

  if (mu.dim() == 1) {
    return bl_distance_line(mu.points(), mu.weights(), nu.points(), nu.weights(), options.grid_resolution);
  }
  if (options.mode == BlMode::kExact) {
    throw UnsupportedDimension("exact bounded-Lipschitz distance requires d = 1; use BlMode::kSliced");
  }

  // phi(u . x) with |u| = 1 is in Lip_1 whenever phi is, so every slice is a lower bound.
  const std::size_t d = mu.dim();
  std::vector<double> direction(d);
  std::vector<double> proj_mu(mu.size());
  std::vector<double> proj_nu(nu.size());
  double best = 0.0;
  for (std::size_t p = 0; p < options.projections; ++p) {
    CounterStream(options.projection_seed, StreamRole::kProjection, 0, p).normals(0, direction);
    double norm = 0.0;
    for (double v : direction) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : direction) v /= norm;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const auto x = mu.point(i);
      proj_mu[i] = std::inner_product(x.begin(), x.end(), direction.begin(), 0.0);
    }
    for (std::size_t i = 0; i < nu.size(); ++i) {
      const auto x = nu.point(i);
      proj_nu[i] = std::inner_product(x.begin(), x.end(), direction.begin(), 0.0);
    }
    best = std::max(best, bl_distance_line(proj_mu, mu.weights(), proj_nu, nu.weights(), options.grid_resolution));
  }
  return best;
}

double w1_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != 1 || nu.dim() != 1) throw UnsupportedDimension("w1_1d requires d = 1");
  const double scale = std::max({1.0, mu.mass(), nu.mass()});
  if (std::abs(mu.mass() - nu.mass()) > 1e-9 * scale) {
    throw MassMismatch("w1_1d: masses differ (" + std::to_string(mu.mass()) + " vs " +
                       std::to_string(nu.mass()) + ")");
  }
  const auto atoms = signed_difference(mu.points(), mu.weights(), nu.points(), nu.weights());
  double cdf = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < atoms.size(); ++k) {
    cdf += atoms[k].w;
    total += std::abs(cdf) * (atoms[k + 1].x - atoms[k].x);
  }
  return total;
}

}  // namespace mfsim
