#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace mfsim {

// Counter-based random numbers (Philox4x32-10). Every draw is a pure
// function of (key, counter), so the value assigned to a given particle and
// step never depends on evaluation order or thread count.

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key) noexcept;

/// What a stream is used for. Part of the counter, so streams with the same
/// seed but different roles are independent.
enum class StreamRole : std::uint32_t {
  kCommon = 1,         // W increments
  kIdiosyncratic = 2,  // B^i increments
  kInitial = 3,        // X_0 samples
  kInner = 4,          // nested inner samples (duality, conditional tests)
  kProjection = 5,     // sliced metric directions
  kProbe = 6,          // assumption audits
  kAuxiliary = 7,
};

/// SplitMix64 finalizer; derives independent sub-seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept;

/// One logical stream of standard normals / uniforms, addressed by
/// (seed, role, path, index). Draw j of the stream is fixed forever.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, StreamRole role, std::uint32_t path, std::uint64_t index) noexcept;

  /// Fills `out` with draws [offset, offset + out.size()) of the normal sequence.
  void normals(std::uint64_t offset, std::span<double> out) const noexcept;
  /// Uniform draws on the open interval (0, 1).
  void uniforms(std::uint64_t offset, std::span<double> out) const noexcept;

  double normal(std::uint64_t j) const noexcept;
  double uniform(std::uint64_t j) const noexcept;

 private:
  PhiloxCounter block_counter(std::uint64_t block) const noexcept;

  PhiloxKey key_;
  std::uint32_t role_;
  std::uint32_t path_;
  std::uint64_t index_;
};

}  // namespace mfsim
