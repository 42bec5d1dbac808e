#pragma once

// Binary parameter container:
//   magic "MLSIMPCK", u32 version,
//   u64 metadata count, then (string key, string value) pairs,
//   u64 array count, then (string name, u32 rank, u64 dims[rank], f64 values[]).
// Strings are u64 length + bytes. Integers and floats are little-endian.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "mlsimp/ad/tensor.hpp"

namespace mlsimp::ad {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::map<std::string, Tensor> arrays;

  /// Copies every parameter value under its name; duplicate names throw.
  void store(const ParameterList& params);
  /// Writes stored arrays back into `params`. Missing names or shape
  /// mismatches throw std::invalid_argument before anything is modified.
  void restore(const ParameterList& params) const;
};

std::string serialize(const Checkpoint& ck);
/// Throws IoError on a bad magic, unknown version or truncated input.
Checkpoint deserialize(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mlsimp::ad
