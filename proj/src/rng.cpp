#include "mfsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace mfsim {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

// (0, 1) from 64 random bits, 53-bit resolution, never 0 or 1.
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kPhiloxM0, ctr[0], lo0, hi0);
    mulhilo(kPhiloxM1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

CounterStream::CounterStream(std::uint64_t seed, StreamRole role, std::uint32_t path,
                             std::uint64_t index) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      role_(static_cast<std::uint32_t>(role)),
      path_(path),
      index_(index) {}

PhiloxCounter CounterStream::block_counter(std::uint64_t block) const noexcept {
  // word 0: block, word 1: index low bits, word 2: path,
  // word 3: role in the top byte, index high bits / block high bits below.
  const auto index_hi = static_cast<std::uint32_t>((index_ >> 32) & 0xFFFu);
  const auto block_hi = static_cast<std::uint32_t>((block >> 32) & 0xFFFu);
  return {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(index_), path_,
          (role_ << 24) | (index_hi << 12) | block_hi};
}

void CounterStream::normals(std::uint64_t offset, std::span<double> out) const noexcept {
  // Box-Muller: block b yields normals 2b and 2b+1.
  std::size_t filled = 0;
  std::uint64_t j = offset;
  while (filled < out.size()) {
    const std::uint64_t block = j / 2;
    const PhiloxCounter r = philox4x32(block_counter(block), key_);
    const double u1 = to_open_unit(r[0], r[1]);
    const double u2 = to_open_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    const double pair[2] = {radius * std::cos(angle), radius * std::sin(angle)};
    for (std::uint64_t k = j % 2; k < 2 && filled < out.size(); ++k, ++j) out[filled++] = pair[k];
  }
}

void CounterStream::uniforms(std::uint64_t offset, std::span<double> out) const noexcept {
  std::size_t filled = 0;
  std::uint64_t j = offset;
  while (filled < out.size()) {
    const PhiloxCounter r = philox4x32(block_counter(j / 2), key_);
    const double pair[2] = {to_open_unit(r[0], r[1]), to_open_unit(r[2], r[3])};
    for (std::uint64_t k = j % 2; k < 2 && filled < out.size(); ++k, ++j) out[filled++] = pair[k];
  }
}

double CounterStream::normal(std::uint64_t j) const noexcept {
  double z;
  normals(j, std::span<double>(&z, 1));
  return z;
}

double CounterStream::uniform(std::uint64_t j) const noexcept {
  double u;
  uniforms(j, std::span<double>(&u, 1));
  return u;
}

}  // namespace mfsim
