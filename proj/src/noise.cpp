#include "canto/noise.hpp"

#include <algorithm>
#include <stdexcept>

namespace canto {

std::vector<int> add_noise(const std::vector<int>& tokens, double p_drop,
                           int shuffle_k, std::mt19937_64& rng) {
  if (tokens.empty()) throw std::invalid_argument("add_noise: empty input");
  if (p_drop < 0.0 || p_drop >= 1.0)
    throw std::invalid_argument("add_noise: p_drop must be in [0, 1)");
  if (shuffle_k < 0)
    throw std::invalid_argument("add_noise: shuffle_k must be >= 0");

  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<int> kept;
  kept.reserve(tokens.size());
  for (int tok : tokens)
    if (uni(rng) >= p_drop) kept.push_back(tok);
  if (kept.empty()) {
    // Keep-one floor: a uniformly chosen token survives.
    std::uniform_int_distribution<std::size_t> pick(0, tokens.size() - 1);
    kept.push_back(tokens[pick(rng)]);
  }

  if (shuffle_k == 0 || kept.size() < 2) return kept;

  // Sort by i + U(0, k): the resulting permutation displaces no element by
  // more than k positions. Stable tie-break on the original index.
  std::vector<std::pair<double, std::size_t>> keys(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i)
    keys[i] = {static_cast<double>(i) +
                   uni(rng) * static_cast<double>(shuffle_k),
               i};
  std::sort(keys.begin(), keys.end());
  std::vector<int> out(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) out[i] = kept[keys[i].second];
  return out;
}

std::vector<int> add_noise(const std::vector<int>& tokens,
                           const NoiseConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return add_noise(tokens, cfg.p_drop, cfg.shuffle_k, rng);
}

}  // namespace canto
