#include "ufpgd/rng.hpp"

#include <cmath>
#include <numbers>

namespace ufpgd {
namespace {

// splitmix64 finalizer; decorrelates consecutive stream indices.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream_index) {
  return Rng(mix64(seed ^ mix64(stream_index)));
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::size_t Rng::index_below(std::size_t n) {
  return static_cast<std::size_t>(next_u64() % n);
}

Complex Rng::complex_gaussian() {
  // Box-Muller, scaled so that E|z|^2 = 1.
  double radius = std::sqrt(-std::log(uniform_open()));
  double angle = 2.0 * std::numbers::pi * uniform();
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace ufpgd
