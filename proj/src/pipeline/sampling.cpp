#include "mlsimp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mlsimp {

namespace {

void check(std::span<const double> weights, std::size_t m) {
  if (m > weights.size()) throw std::invalid_argument("sample size exceeds the population");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("sampling weights must be finite and non-negative");
  }
}

std::vector<std::size_t> smallest(const std::vector<double>& key, std::size_t m) {
  std::vector<std::size_t> idx(key.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(), [&](std::size_t a, std::size_t b) {
    return key[a] < key[b] || (key[a] == key[b] && a < b);
  });
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::vector<std::size_t> weighted_sample(std::span<const double> weights, std::size_t m, std::mt19937_64& rng) {
  check(weights, m);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> key(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    // 1 - U lies in (0, 1], so the log is finite.
    const double e = -std::log(1.0 - u(rng));
    key[i] = weights[i] > 0.0 ? e / weights[i] : std::numeric_limits<double>::infinity();
  }
  return smallest(key, m);
}

std::vector<std::size_t> top_m(std::span<const double> weights, std::size_t m) {
  check(weights, m);
  std::vector<double> key(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) key[i] = -weights[i];
  return smallest(key, m);
}

}  // namespace mlsimp
