#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mlsimp/gnn/tbert.hpp"

namespace mlsimp {

/// beta_0 < beta_1 < ... < beta_G, all in (0, 1). Step 0 moves the clean
/// state to N(x, beta_0 I); step g >= 1 maps x to N(sqrt(1 - beta_g) x, beta_g I).
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  /// Throws std::invalid_argument unless strictly increasing inside (0, 1)
  /// with at least two entries.
  explicit NoiseSchedule(std::vector<double> betas);

  /// Evenly spaced from `lo` to `hi` over steps + 1 entries. With `scaled`
  /// both ends are multiplied by 1000 / steps (hi capped at 0.999), so short
  /// chains reach the same terminal noise level as a 1000-step chain.
  static NoiseSchedule linear(std::size_t steps, double lo = 1e-4, double hi = 0.02, bool scaled = true);

  std::size_t steps() const { return betas_.size() - 1; }
  double beta(std::size_t g) const { return betas_.at(g); }
  const std::vector<double>& betas() const { return betas_; }
  /// prod_{s=1..g} (1 - beta_s); 1 at g = 0.
  double alpha_bar(std::size_t g) const { return alpha_bar_.at(g); }
  /// x_g | x0 ~ N(mean_coef(g) x0, variance(g) I).
  double mean_coef(std::size_t g) const;
  double variance(std::size_t g) const;
  /// Variance of x_{g-1} | x_g, x0 for g >= 1.
  double posterior_variance(std::size_t g) const;
  /// Posterior mean = c_state * x_g + c_x0 * x0.
  double posterior_state_coef(std::size_t g) const;
  double posterior_x0_coef(std::size_t g) const;

 private:
  std::vector<double> betas_;
  std::vector<double> alpha_bar_;
};

struct DiffConfig {
  std::size_t steps = 50;
  std::size_t denoiser_layers = 2;
  std::size_t heads = 2;
  bool scaled_schedule = true;
  double lambda2 = 0.5;
};

struct DiffusionModel {
  DiffConfig config;
  NoiseSchedule schedule;
  TBert encoder;              // trajectory encoder (T-Bert architecture, own weights)
  ad::Parameter type_embed;   // [2, dim]: row 0 conditioning block, row 1 generated block
  ad::Parameter step_embed;   // [steps + 1, dim]
  std::vector<ad::AttentionBlock> denoiser;
  ad::Linear head;

  DiffusionModel() = default;
  DiffusionModel(const std::string& name, DiffConfig config, TBert encoder, std::uint64_t seed);
  std::size_t dim() const { return encoder.config.dim; }
  ad::ParameterList parameters();
};

/// [H_T; H_T*] where H_T* are the rows of H_T at `kept`. Throws
/// ContractError unless kept is strictly increasing and in range.
ad::Var concat_encode(ad::Tape& tape, DiffusionModel& model, const TrajectoryFeatures& traj,
                      const std::vector<std::size_t>& kept);
/// Same, recovering T* as a subsequence of T.
ad::Var concat_encode(ad::Tape& tape, DiffusionModel& model, const Trajectory& traj, const Trajectory& simplified,
                      const Projection& proj);

/// One forward noising step applied to rows [cond_rows, rows) of `state`;
/// the leading conditioning rows are copied unchanged. Throws
/// std::invalid_argument for g > steps.
ad::Tensor forward_noise(const ad::Tensor& state, std::size_t cond_rows, const NoiseSchedule& schedule, std::size_t g,
                         ad::Rng& rng);

/// x0 estimate [z, dim] for the noisy block at step g given the clean
/// conditioning block.
ad::Var denoise(ad::Tape& tape, DiffusionModel& model, const ad::Var& cond, const ad::Var& noisy, std::size_t g);

/// Samples x_{g-1} given x_g (g >= 1). `sigma_scale` multiplies the posterior
/// standard deviation; 0 makes the step deterministic.
ad::Tensor reverse_step(DiffusionModel& model, const ad::Tensor& cond, const ad::Tensor& state, std::size_t g,
                        ad::Rng& rng, double sigma_scale = 1.0);

/// mean_i log mean_{j != i} exp(-2 ||h_i - h_j||^2). Throws for fewer than 2 rows.
ad::Var diversity_loss(const ad::Var& generated);

struct DiffTrainOptions {
  std::size_t epochs = 20;
  std::size_t batch = 8;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct DiffEpoch {
  double loss = 0.0;
  double diffusion = 0.0;
  double diversity = 0.0;
};

/// Loss of one training example: x0-reconstruction MSE at a sampled step plus
/// lambda2 times the diversity of the reconstruction.
struct DiffLoss {
  ad::Var total;
  ad::Var diffusion;
  ad::Var diversity;  // invalid when fewer than two kept points
};
DiffLoss diffusion_loss(ad::Tape& tape, DiffusionModel& model, const TrajectoryFeatures& traj,
                        const std::vector<std::size_t>& kept, ad::Rng& rng);

/// `soft_labels[t]` lists the retained indices of trajectory t.
std::vector<DiffEpoch> train_diff_ts(DiffusionModel& model, const std::vector<TrajectoryFeatures>& corpus,
                                     const std::vector<std::vector<std::size_t>>& soft_labels,
                                     const DiffTrainOptions& options);

struct AmplifiedLabels {
  std::vector<std::uint8_t> labels;    // one per point, exactly alpha ones
  std::vector<std::size_t> selected;   // ascending
};

/// Runs the reverse chain from alpha Gaussian rows and matches the result to
/// the trajectory's points by cosine similarity, highest score first, each
/// point and each generated row used once. Throws std::invalid_argument for
/// alpha >= |T|.
AmplifiedLabels infer_amplified(DiffusionModel& model, const TrajectoryFeatures& traj, std::size_t alpha,
                                std::uint64_t seed);

}  // namespace mlsimp
