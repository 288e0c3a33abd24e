#include "mfsim/noise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfsim/errors.hpp"
#include "mfsim/rng.hpp"

namespace mfsim {

TimeGrid::TimeGrid(double horizon, double dt) : horizon_(horizon), dt_(dt), steps_(0) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("invalid_grid", "time step dt must be positive and finite");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("invalid_grid", "horizon T must be positive and finite");
  }
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os.precision(17);
    os << "T / dt = " << ratio << " is not an integer";
    throw ConfigError("invalid_grid", os.str());
  }
  steps_ = static_cast<std::size_t>(rounded);
}

std::size_t TimeGrid::index_of(double t) const {
  const double s = t / dt_;
  const double k = std::round(s);
  if (k < 0.0 || k > static_cast<double>(steps_) || std::abs(s - k) > 1e-9 * std::max(1.0, s)) {
    throw InvalidArgument("time " + std::to_string(t) + " is not on the grid");
  }
  return static_cast<std::size_t>(k);
}

NoiseBundle::NoiseBundle(const TimeGrid& grid, std::size_t dim_w, std::size_t dim_b, std::size_t n, PathId w_path,
                         std::uint64_t b_seed, std::vector<double> dw, std::vector<double> db)
    : grid_(grid),
      dim_w_(dim_w),
      dim_b_(dim_b),
      n_(n),
      w_path_(w_path),
      b_seed_(b_seed),
      dw_(std::move(dw)),
      db_(std::move(db)) {}

NoiseBundle::NoiseBundle(const TimeGrid& grid, std::size_t dim_w, std::size_t dim_b, std::size_t n_particles,
                         PathId w_path, std::uint64_t b_seed)
    : grid_(grid), dim_w_(dim_w), dim_b_(dim_b), n_(n_particles), w_path_(w_path), b_seed_(b_seed) {
  if (dim_w == 0 || dim_b == 0) throw InvalidArgument("noise dimensions must be positive");
  const std::size_t m = grid.steps();
  const double scale = std::sqrt(grid.dt());
  dw_.resize(m * dim_w);
  CounterStream(w_path.seed, StreamRole::kCommon, w_path.path, 0).normals(0, dw_);
  for (double& v : dw_) v *= scale;
  db_.resize(n_particles * m * dim_b);
  const auto n = static_cast<std::ptrdiff_t>(n_particles);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto row = std::span<double>(db_).subspan(static_cast<std::size_t>(i) * m * dim_b, m * dim_b);
    CounterStream(b_seed, StreamRole::kIdiosyncratic, w_path.path, static_cast<std::uint64_t>(i)).normals(0, row);
    for (double& v : row) v *= scale;
  }
}

NoiseBundle NoiseBundle::from_increments(const TimeGrid& grid, std::size_t dim_w, std::size_t dim_b,
                                         std::size_t n_particles, PathId w_path, std::uint64_t b_seed,
                                         std::vector<double> dw, std::vector<double> db) {
  if (dw.size() != grid.steps() * dim_w || db.size() != n_particles * grid.steps() * dim_b) {
    throw InvalidArgument("noise increments do not match the grid and dimensions");
  }
  return NoiseBundle(grid, dim_w, dim_b, n_particles, w_path, b_seed, std::move(dw), std::move(db));
}

std::vector<double> NoiseBundle::w_at(std::size_t k) const {
  if (k > grid_.steps()) throw InvalidArgument("w_at: index out of range");
  std::vector<double> w(dim_w_, 0.0);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t c = 0; c < dim_w_; ++c) w[c] += dw_[j * dim_w_ + c];
  return w;
}

NoiseBundle NoiseBundle::coarsen(std::size_t factor) const {
  if (factor == 0 || grid_.steps() % factor != 0) {
    throw InvalidArgument("coarsening factor must divide the number of steps");
  }
  const std::size_t m = grid_.steps();
  const std::size_t mc = m / factor;
  TimeGrid coarse(grid_.horizon(), grid_.dt() * static_cast<double>(factor));
  std::vector<double> dw(mc * dim_w_, 0.0);
  for (std::size_t k = 0; k < mc; ++k)
    for (std::size_t f = 0; f < factor; ++f)
      for (std::size_t c = 0; c < dim_w_; ++c) dw[k * dim_w_ + c] += dw_[(k * factor + f) * dim_w_ + c];
  std::vector<double> db(n_ * mc * dim_b_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = 0; k < mc; ++k)
      for (std::size_t f = 0; f < factor; ++f)
        for (std::size_t c = 0; c < dim_b_; ++c)
          db[(i * mc + k) * dim_b_ + c] += db_[(i * m + k * factor + f) * dim_b_ + c];
  return NoiseBundle(coarse, dim_w_, dim_b_, n_, w_path_, b_seed_, std::move(dw), std::move(db));
}

NoiseBundle NoiseBundle::first_particles(std::size_t n) const {
  if (n > n_) throw InvalidArgument("first_particles: more particles requested than stored");
  std::vector<double> db(db_.begin(), db_.begin() + static_cast<std::ptrdiff_t>(n * grid_.steps() * dim_b_));
  return NoiseBundle(grid_, dim_w_, dim_b_, n, w_path_, b_seed_, dw_, std::move(db));
}

}  // namespace mfsim
