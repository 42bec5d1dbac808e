#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace mlsimp {

/// Weighted sampling of m distinct indices without replacement by the
/// exponential race: key_i = -ln(U_i) / w_i, keep the m smallest keys
/// (ties to the lower index). Zero weights only fill in after every positive
/// weight is taken. Output is ascending. Throws std::invalid_argument for
/// m > size or a negative/non-finite weight.
std::vector<std::size_t> weighted_sample(std::span<const double> weights, std::size_t m, std::mt19937_64& rng);

/// The m largest weights (ties to the lower index), ascending.
std::vector<std::size_t> top_m(std::span<const double> weights, std::size_t m);

}  // namespace mlsimp
