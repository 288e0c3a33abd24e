#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mfsim {

/// Initial law mu_0 / r on R^d, sampled into N-particle clouds.
class InitialLaw {
 public:
  enum class Kind { kGaussian, kUniform, kPoint, kAtoms };

  /// Independent coordinates N(mean_k, std^2).
  static InitialLaw gaussian(std::vector<double> mean, double std);
  /// Independent coordinates uniform on [lo, hi].
  static InitialLaw uniform(std::size_t dim, double lo, double hi);
  static InitialLaw point(std::vector<double> location);
  /// Finitely many atoms with probabilities `weights` (normalized). Clouds
  /// allocate particles deterministically: atom j receives a block of
  /// round(N * cumulative weight) boundaries, in atom order.
  static InitialLaw atoms(std::size_t dim, std::vector<double> locations, std::vector<double> weights);

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::string& name() const noexcept { return name_; }

  /// N x d row-major sample. Random kinds draw from the (seed, initial, path) stream.
  std::vector<double> sample(std::size_t n, std::uint64_t seed, std::uint32_t path) const;

  /// Exact mean and per-coordinate variance of the law.
  std::vector<double> mean() const;
  std::vector<double> variance() const;

 private:
  Kind kind_ = Kind::kPoint;
  std::size_t dim_ = 1;
  std::string name_;
  std::vector<double> a_;  // mean / lower bound / location / atom locations
  std::vector<double> b_;  // std / upper bound / atom weights
};

}  // namespace mfsim
