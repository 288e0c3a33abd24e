#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mfsim {

/// Uniform grid t_k = k * dt, k = 0..steps, with steps * dt = horizon.
class TimeGrid {
 public:
  /// Throws ConfigError("invalid_grid") unless dt > 0, horizon > 0 and
  /// horizon / dt is an integer within 1e-9.
  TimeGrid(double horizon, double dt);

  double horizon() const noexcept { return horizon_; }
  double dt() const noexcept { return dt_; }
  std::size_t steps() const noexcept { return steps_; }
  double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt_; }

  /// Index of the grid point closest to t; throws InvalidArgument if t is
  /// not a grid point within 1e-9 * dt.
  std::size_t index_of(double t) const;

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
    return a.steps_ == b.steps_ && a.dt_ == b.dt_;
  }

 private:
  double horizon_;
  double dt_;
  std::size_t steps_;
};

/// Identifies a common-noise path: the seed of the W stream and the path index.
struct PathId {
  std::uint64_t seed = 0;
  std::uint32_t path = 0;

  friend bool operator==(const PathId&, const PathId&) = default;
};

/// One common-noise path W (d1-dimensional) and N idiosyncratic paths B^i
/// (d-dimensional) on a time grid, stored as increments.
///
/// Increments are drawn from counter-based streams: dW from
/// (w_seed, common, path) and row i of dB from (b_seed, idiosyncratic, path, i),
/// so regenerating with the same seeds reproduces them bit for bit.
class NoiseBundle {
 public:
  NoiseBundle(const TimeGrid& grid, std::size_t dim_w, std::size_t dim_b, std::size_t n_particles, PathId w_path,
              std::uint64_t b_seed);

  /// Assemble a bundle from explicit increments (dW: steps x dim_w,
  /// dB: n_particles x steps x dim_b).
  static NoiseBundle from_increments(const TimeGrid& grid, std::size_t dim_w, std::size_t dim_b,
                                     std::size_t n_particles, PathId w_path, std::uint64_t b_seed,
                                     std::vector<double> dw, std::vector<double> db);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t dim_w() const noexcept { return dim_w_; }
  std::size_t dim_b() const noexcept { return dim_b_; }
  std::size_t particles() const noexcept { return n_; }
  PathId path_id() const noexcept { return w_path_; }
  std::uint64_t b_seed() const noexcept { return b_seed_; }

  std::span<const double> dw(std::size_t k) const noexcept {
    return std::span<const double>(dw_).subspan(k * dim_w_, dim_w_);
  }
  std::span<const double> db(std::size_t i, std::size_t k) const noexcept {
    return std::span<const double>(db_).subspan((i * grid_.steps() + k) * dim_b_, dim_b_);
  }
  std::span<const double> all_dw() const noexcept { return dw_; }

  /// W_{t_k} = sum_{j<k} dW_j (summed in index order).
  std::vector<double> w_at(std::size_t k) const;

  /// Same path on the grid with step factor * dt; increments are summed over
  /// consecutive blocks of `factor` fine steps.
  NoiseBundle coarsen(std::size_t factor) const;

  /// Copy restricted to particles [0, n).
  NoiseBundle first_particles(std::size_t n) const;

 private:
  NoiseBundle(const TimeGrid& grid, std::size_t dim_w, std::size_t dim_b, std::size_t n, PathId w_path,
              std::uint64_t b_seed, std::vector<double> dw, std::vector<double> db);

  TimeGrid grid_;
  std::size_t dim_w_;
  std::size_t dim_b_;
  std::size_t n_;
  PathId w_path_;
  std::uint64_t b_seed_;
  std::vector<double> dw_;
  std::vector<double> db_;
};

}  // namespace mfsim
