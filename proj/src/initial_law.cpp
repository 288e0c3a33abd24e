#include "mfsim/initial_law.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfsim/errors.hpp"
#include "mfsim/rng.hpp"

namespace mfsim {

InitialLaw InitialLaw::gaussian(std::vector<double> mean, double std) {
  if (mean.empty()) throw InvalidArgument("gaussian initial law needs a mean");
  if (!(std >= 0.0)) throw InvalidArgument("gaussian initial law needs std >= 0");
  InitialLaw law;
  law.kind_ = Kind::kGaussian;
  law.dim_ = mean.size();
  law.name_ = "gaussian";
  law.a_ = std::move(mean);
  law.b_ = {std};
  return law;
}

InitialLaw InitialLaw::uniform(std::size_t dim, double lo, double hi) {
  if (dim == 0 || !(hi > lo)) throw InvalidArgument("uniform initial law needs dim > 0 and lo < hi");
  InitialLaw law;
  law.kind_ = Kind::kUniform;
  law.dim_ = dim;
  law.name_ = "uniform";
  law.a_ = {lo};
  law.b_ = {hi};
  return law;
}

InitialLaw InitialLaw::point(std::vector<double> location) {
  if (location.empty()) throw InvalidArgument("point initial law needs a location");
  InitialLaw law;
  law.kind_ = Kind::kPoint;
  law.dim_ = location.size();
  law.name_ = "point";
  law.a_ = std::move(location);
  return law;
}

InitialLaw InitialLaw::atoms(std::size_t dim, std::vector<double> locations, std::vector<double> weights) {
  if (dim == 0 || weights.empty() || locations.size() != dim * weights.size()) {
    throw InvalidArgument("atoms initial law: locations must hold dim values per weight");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double w : weights)
    if (!(w >= 0.0)) throw InvalidArgument("atoms initial law: weights must be non-negative");
  if (!(total > 0.0)) throw InvalidArgument("atoms initial law: weights must have positive sum");
  for (double& w : weights) w /= total;
  InitialLaw law;
  law.kind_ = Kind::kAtoms;
  law.dim_ = dim;
  law.name_ = "atoms";
  law.a_ = std::move(locations);
  law.b_ = std::move(weights);
  return law;
}

std::vector<double> InitialLaw::sample(std::size_t n, std::uint64_t seed, std::uint32_t path) const {
  std::vector<double> out(n * dim_);
  const CounterStream stream(seed, StreamRole::kInitial, path, 0);
  switch (kind_) {
    case Kind::kGaussian:
      stream.normals(0, out);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < dim_; ++k) out[i * dim_ + k] = a_[k] + b_[0] * out[i * dim_ + k];
      break;
    case Kind::kUniform:
      stream.uniforms(0, out);
      for (double& v : out) v = a_[0] + (b_[0] - a_[0]) * v;
      break;
    case Kind::kPoint:
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < dim_; ++k) out[i * dim_ + k] = a_[k];
      break;
    case Kind::kAtoms: {
      double cumulative = 0.0;
      std::size_t start = 0;
      for (std::size_t j = 0; j < b_.size(); ++j) {
        cumulative += b_[j];
        const std::size_t end =
            j + 1 == b_.size() ? n : static_cast<std::size_t>(std::llround(cumulative * static_cast<double>(n)));
        for (std::size_t i = start; i < end && i < n; ++i)
          for (std::size_t k = 0; k < dim_; ++k) out[i * dim_ + k] = a_[j * dim_ + k];
        start = std::max(start, end);
      }
      break;
    }
  }
  return out;
}

std::vector<double> InitialLaw::mean() const {
  std::vector<double> m(dim_, 0.0);
  switch (kind_) {
    case Kind::kGaussian:
    case Kind::kPoint:
      m = a_;
      break;
    case Kind::kUniform:
      m.assign(dim_, 0.5 * (a_[0] + b_[0]));
      break;
    case Kind::kAtoms:
      for (std::size_t j = 0; j < b_.size(); ++j)
        for (std::size_t k = 0; k < dim_; ++k) m[k] += b_[j] * a_[j * dim_ + k];
      break;
  }
  return m;
}

std::vector<double> InitialLaw::variance() const {
  std::vector<double> v(dim_, 0.0);
  switch (kind_) {
    case Kind::kGaussian:
      v.assign(dim_, b_[0] * b_[0]);
      break;
    case Kind::kUniform:
      v.assign(dim_, (b_[0] - a_[0]) * (b_[0] - a_[0]) / 12.0);
      break;
    case Kind::kPoint:
      break;
    case Kind::kAtoms: {
      const auto m = mean();
      for (std::size_t j = 0; j < b_.size(); ++j)
        for (std::size_t k = 0; k < dim_; ++k) v[k] += b_[j] * (a_[j * dim_ + k] - m[k]) * (a_[j * dim_ + k] - m[k]);
      break;
    }
  }
  return v;
}

}  // namespace mfsim
