#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mlsimp/gnn/mutual_learning.hpp"
#include "mlsimp/query.hpp"

namespace mlsimp {

struct AdjustmentOptions {
  double delta = 0.5;
  std::size_t queries = 100;
  std::size_t grid_x = 10;
  std::size_t grid_y = 10;
  std::size_t grid_t = 8;
};

struct PipelineConfig {
  std::string input;
  std::string format = "csv";
  std::string output_dir = ".";

  double cr = 0.01;
  bool top_m = false;  // deterministic top-m instead of weighted sampling
  AdjustmentOptions adjustment;
  IndexOptions index;
  std::size_t eval_queries = 100;  // per query type

  TBertConfig tbert;
  GnnConfig gnn;
  DiffConfig diff;
  MlmOptions mlm;
  MlSchedule ml;

  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument when delta is outside [0, 1] or cr outside (0, 1].
void validate(const PipelineConfig& c);

/// INI text with sections [data], [simplify], [adjust], [index], [evaluate],
/// [tbert], [gnn], [diff], [mlm], [train]. Unknown keys throw
/// std::invalid_argument; absent keys keep their defaults.
PipelineConfig parse_config(const std::string& ini_text);
PipelineConfig load_config(const std::filesystem::path& path);
/// Applies "section.key=value" overrides in order.
void apply_overrides(PipelineConfig& c, const std::vector<std::string>& overrides);
/// Every key with its current value, parseable by parse_config.
std::string to_ini(const PipelineConfig& c);

}  // namespace mlsimp
