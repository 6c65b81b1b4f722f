#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace clifer {

using Rng = std::mt19937_64;

// Independent, reproducible stream for a (seed, tag...) tuple.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) {
  std::vector<std::uint32_t> words;
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (auto t : tags) {
    words.push_back(static_cast<std::uint32_t>(t));
    words.push_back(static_cast<std::uint32_t>(t >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

// Adds N(0, sigma^2) to every coordinate. sigma == 0 leaves x untouched and draws nothing.
template <typename Container>
void add_gaussian(Container& x, double sigma, Rng& rng) {
  if (sigma == 0.0) return;
  std::normal_distribution<double> n(0.0, sigma);
  for (auto& v : x) v += n(rng);
}

}  // namespace clifer
