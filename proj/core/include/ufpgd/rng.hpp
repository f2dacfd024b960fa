#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ufpgd/types.hpp"

namespace ufpgd {

// Deterministic random source. All distribution transforms are pinned
// here instead of using std:: distributions, whose output is
// implementation-defined; two builds with the same seed must produce
// bit-identical streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Independent stream for (seed, stream_index), e.g. one per channel
  // realization so that sample i does not depend on how many samples
  // were drawn before it.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_index);

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();

  // Uniform on (0, 1], safe as a log() argument.
  double uniform_open();

  // Uniform integer on [0, n), n >= 1.
  std::size_t index_below(std::size_t n);

  // Standard circularly-symmetric complex Gaussian CN(0, 1):
  // real and imaginary parts are independent N(0, 1/2). Box-Muller.
  Complex complex_gaussian();

 private:
  std::mt19937_64 gen_;
};

// In-place Fisher-Yates shuffle driven by `rng`.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rng.index_below(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace ufpgd
