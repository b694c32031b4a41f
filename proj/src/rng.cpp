#include "coevae/rng.hpp"

#include <cmath>
#include <numbers>

namespace coevae {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t cell, Stream stream) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (cell * 0x632be59bd9b4e019ULL));
  return splitmix64(h ^ static_cast<std::uint64_t>(stream));
}

Rng make_rng(std::uint64_t seed, std::uint64_t cell, Stream stream) {
  return Rng(derive_seed(seed, cell, stream));
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  // Lemire-style rejection keeps the draw exactly uniform.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

bool bernoulli(Rng& rng, double p) {
  // Always consume one draw so the stream position does not depend on p.
  return uniform01(rng) < p;
}

double standard_normal(Rng& rng) {
  // Box-Muller; one value per call keeps stream consumption fixed at two words.
  double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace coevae
