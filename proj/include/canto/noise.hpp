// Corruption model for denoising autoencoding: independent token drops with
// a keep-one floor, then a local shuffle with bounded displacement.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace canto {

struct NoiseConfig {
  double p_drop = 0.1;
  int shuffle_k = 3;
  std::uint64_t seed = 0;
};

// Every surviving token ends up within shuffle_k positions of its index in
// the survivor sequence. No insertions, no substitutions.
std::vector<int> add_noise(const std::vector<int>& tokens, double p_drop,
                           int shuffle_k, std::mt19937_64& rng);

std::vector<int> add_noise(const std::vector<int>& tokens,
                           const NoiseConfig& cfg);

}  // namespace canto
