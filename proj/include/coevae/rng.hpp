#pragma once

#include <cstdint>
#include <random>

namespace coevae {

using Rng = std::mt19937_64;

// Independent streams are keyed by purpose so that one consumer never shifts
// another consumer's draws (canonical and single-cell runs must line up).
enum class Stream : std::uint64_t {
  init = 1,
  shuffle = 2,
  evaluation = 3,
  selection = 4,
  mutation = 5,
  prune_event = 6,
  prune_operator = 7,
  centroids = 8,
  train_data = 9,
  test_data = 10,
  heldout_data = 11,
};

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic seed for (seed, cell, stream). cell = 0 for canonical runs.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t cell, Stream stream);

Rng make_rng(std::uint64_t seed, std::uint64_t cell, Stream stream);

// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

// Uniform integer in [0, bound). bound must be > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

bool bernoulli(Rng& rng, double p);

double standard_normal(Rng& rng);

}  // namespace coevae
