#include "mlsimp/gnn/diff_ts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "mlsimp/ad/optim.hpp"

namespace mlsimp {

using namespace ad;

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.size() < 2) throw std::invalid_argument("noise schedule needs at least one step after step 0");
  for (std::size_t g = 0; g < betas_.size(); ++g) {
    if (!(betas_[g] > 0.0 && betas_[g] < 1.0)) throw std::invalid_argument("noise levels must lie in (0, 1)");
    if (g > 0 && !(betas_[g] > betas_[g - 1])) throw std::invalid_argument("noise levels must be strictly increasing");
  }
  alpha_bar_.assign(betas_.size(), 1.0);
  for (std::size_t g = 1; g < betas_.size(); ++g) alpha_bar_[g] = alpha_bar_[g - 1] * (1.0 - betas_[g]);
}

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double lo, double hi, bool scaled) {
  if (steps == 0) throw std::invalid_argument("noise schedule needs at least one step");
  if (scaled) {
    const double s = 1000.0 / static_cast<double>(steps);
    lo *= s;
    hi = std::min(hi * s, 0.999);
  }
  std::vector<double> b(steps + 1);
  for (std::size_t g = 0; g <= steps; ++g) {
    b[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(steps);
  }
  return NoiseSchedule(std::move(b));
}

double NoiseSchedule::mean_coef(std::size_t g) const { return std::sqrt(alpha_bar(g)); }

double NoiseSchedule::variance(std::size_t g) const { return 1.0 - alpha_bar(g) * (1.0 - betas_[0]); }

double NoiseSchedule::posterior_variance(std::size_t g) const {
  if (g == 0) throw std::invalid_argument("posterior is defined for steps >= 1");
  return beta(g) * variance(g - 1) / variance(g);
}

double NoiseSchedule::posterior_state_coef(std::size_t g) const {
  if (g == 0) throw std::invalid_argument("posterior is defined for steps >= 1");
  return std::sqrt(1.0 - beta(g)) * variance(g - 1) / variance(g);
}

double NoiseSchedule::posterior_x0_coef(std::size_t g) const {
  if (g == 0) throw std::invalid_argument("posterior is defined for steps >= 1");
  return beta(g) * mean_coef(g - 1) / variance(g);
}

DiffusionModel::DiffusionModel(const std::string& name, DiffConfig cfg, TBert enc, std::uint64_t seed)
    : config(cfg), schedule(NoiseSchedule::linear(cfg.steps, 1e-4, 0.02, cfg.scaled_schedule)), encoder(std::move(enc)) {
  for (Parameter* p : encoder.parameters(true)) p->name = name + "." + p->name;
  Rng rng(seed);
  const std::size_t d = dim();
  type_embed = Parameter(name + ".type_embed", normal(2, d, 0.5, rng));
  step_embed = Parameter(name + ".step_embed", normal(config.steps + 1, d, 0.5, rng));
  denoiser.reserve(config.denoiser_layers);
  for (std::size_t l = 0; l < config.denoiser_layers; ++l) {
    denoiser.emplace_back(name + ".denoiser" + std::to_string(l), d, config.heads, rng);
  }
  head = Linear(name + ".head", d, d, rng);
}

ParameterList DiffusionModel::parameters() {
  ParameterList out = encoder.parameters(false);
  out.push_back(&type_embed);
  out.push_back(&step_embed);
  for (AttentionBlock& b : denoiser) b.collect(out);
  head.collect(out);
  return out;
}

namespace {

void check_kept(const std::vector<std::size_t>& kept, std::size_t n) {
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (kept[k] >= n || (k > 0 && kept[k] <= kept[k - 1])) {
      throw ContractError("soft label is not a subsequence of its trajectory");
    }
  }
}

Tensor gaussian_like(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = n(rng);
  return t;
}

Tensor rows_of(const Tensor& t, const std::vector<std::size_t>& rows) {
  Tensor out = Tensor::matrix(rows.size(), t.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(t.row(rows[r]), t.row(rows[r]) + t.cols(), out.row(r));
  return out;
}

}  // namespace

Var concat_encode(Tape& tape, DiffusionModel& model, const TrajectoryFeatures& traj,
                  const std::vector<std::size_t>& kept) {
  check_kept(kept, traj.size());
  const Var h = encode_trajectory(tape, model.encoder, traj);
  if (kept.empty()) return h;
  const Var parts[] = {h, gather_rows(h, kept)};
  return concat_rows(parts);
}

Var concat_encode(Tape& tape, DiffusionModel& model, const Trajectory& traj, const Trajectory& simplified,
                  const Projection& proj) {
  return concat_encode(tape, model, model.encoder.featurize(traj, proj), subsequence_indices(traj, simplified));
}

Tensor forward_noise(const Tensor& state, std::size_t cond_rows, const NoiseSchedule& schedule, std::size_t g,
                     Rng& rng) {
  if (g > schedule.steps()) throw std::invalid_argument("diffusion step out of range");
  if (cond_rows > state.rows()) throw std::invalid_argument("conditioning block larger than the state");
  const double beta = schedule.beta(g);
  const double keep = g == 0 ? 1.0 : std::sqrt(1.0 - beta);
  const double sd = std::sqrt(beta);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor out = state;
  for (std::size_t i = cond_rows * state.cols(); i < state.size(); ++i) out[i] = keep * state[i] + sd * n(rng);
  return out;
}

Var denoise(Tape& tape, DiffusionModel& model, const Var& cond, const Var& noisy, std::size_t g) {
  if (g > model.schedule.steps()) throw std::invalid_argument("diffusion step out of range");
  if (cond.cols() != model.dim() || noisy.cols() != model.dim()) throw std::invalid_argument("denoiser width mismatch");
  const Var types = tape.param(model.type_embed);
  const std::size_t r0[] = {0}, r1[] = {1}, rg[] = {g};
  const Var c = add_row(cond, gather_rows(types, r0));
  const Var x = add_row(add_row(noisy, gather_rows(types, r1)), gather_rows(tape.param(model.step_embed), rg));
  const Var parts[] = {c, x};
  Var seq = concat_rows(parts);
  for (AttentionBlock& b : model.denoiser) seq = forward_attention(tape, b, seq);
  return layer_norm_rows(model.head.forward(tape, slice_rows(seq, cond.rows(), noisy.rows())));
}

Tensor reverse_step(DiffusionModel& model, const Tensor& cond, const Tensor& state, std::size_t g, Rng& rng,
                    double sigma_scale) {
  if (g == 0 || g > model.schedule.steps()) throw std::invalid_argument("reverse step out of range");
  Tape tape(false);
  const Tensor x0 = denoise(tape, model, tape.constant(cond), tape.constant(state), g).value();
  const NoiseSchedule& s = model.schedule;
  const double cs = s.posterior_state_coef(g), cx = s.posterior_x0_coef(g);
  const double sd = sigma_scale * std::sqrt(s.posterior_variance(g));
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor out = Tensor::matrix(state.rows(), state.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = cs * state[i] + cx * x0[i];
    if (sd > 0.0) out[i] += sd * n(rng);
  }
  return out;
}

Var diversity_loss(const Var& generated) {
  if (generated.rows() < 2) throw std::invalid_argument("diversity loss needs at least two points");
  return mean(logmeanexp_offdiag(scale(pairwise_sq_dist(generated), -2.0)));
}

DiffLoss diffusion_loss(Tape& tape, DiffusionModel& model, const TrajectoryFeatures& traj,
                        const std::vector<std::size_t>& kept, Rng& rng) {
  if (kept.empty()) throw std::invalid_argument("soft label must keep at least one point");
  check_kept(kept, traj.size());
  const Var cond = encode_trajectory(tape, model.encoder, traj);
  // The clean target is the encoder output at the kept points, held fixed.
  const Tensor x0 = rows_of(cond.value(), kept);
  std::uniform_int_distribution<std::size_t> pick(1, model.schedule.steps());
  const std::size_t g = pick(rng);
  const double a = model.schedule.mean_coef(g), sd = std::sqrt(model.schedule.variance(g));
  Tensor noisy = gaussian_like(x0.rows(), x0.cols(), rng);
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] = a * x0[i] + sd * noisy[i];
  const Var x0_hat = denoise(tape, model, cond, tape.constant(std::move(noisy)), g);
  DiffLoss out;
  out.diffusion = mse(x0_hat, tape.constant(x0));
  out.total = out.diffusion;
  if (kept.size() >= 2) {
    out.diversity = diversity_loss(x0_hat);
    out.total = add(out.total, scale(out.diversity, model.config.lambda2));
  }
  return out;
}

std::vector<DiffEpoch> train_diff_ts(DiffusionModel& model, const std::vector<TrajectoryFeatures>& corpus,
                                     const std::vector<std::vector<std::size_t>>& soft_labels,
                                     const DiffTrainOptions& options) {
  if (corpus.empty()) throw std::invalid_argument("Diff-TS training needs a non-empty corpus");
  if (soft_labels.size() != corpus.size()) throw std::invalid_argument("soft labels must align with the corpus");
  if (model.config.lambda2 < 0.0) throw std::invalid_argument("lambda2 must be non-negative");
  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  Rng rng(options.seed);
  const ParameterList params = model.parameters();
  Adam adam(params, {.lr = options.lr});
  adam.zero_grad();
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<DiffEpoch> log;
  for (std::size_t e = 0; e < options.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    DiffEpoch rec;
    std::size_t pending = 0, used = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t ti = order[k];
      if (!soft_labels[ti].empty()) {
        Tape tape;
        const DiffLoss l = diffusion_loss(tape, model, corpus[ti], soft_labels[ti], rng);
        rec.loss += l.total.value().item();
        rec.diffusion += l.diffusion.value().item();
        if (l.diversity.valid()) rec.diversity += l.diversity.value().item();
        tape.backward(l.total);
        ++pending;
        ++used;
      }
      if (pending == batch || (k + 1 == order.size() && pending > 0)) {
        for (Parameter* p : params)
          for (double& g : p->grad.values()) g /= static_cast<double>(pending);
        adam.step();
        adam.zero_grad();
        pending = 0;
      }
    }
    if (used) {
      rec.loss /= static_cast<double>(used);
      rec.diffusion /= static_cast<double>(used);
      rec.diversity /= static_cast<double>(used);
    }
    log.push_back(rec);
  }
  return log;
}

AmplifiedLabels infer_amplified(DiffusionModel& model, const TrajectoryFeatures& traj, std::size_t alpha,
                                std::uint64_t seed) {
  const std::size_t n = traj.size();
  if (alpha >= n) throw std::invalid_argument("alpha must be smaller than the trajectory length");
  AmplifiedLabels out;
  out.labels.assign(n, 0);
  if (alpha == 0) return out;
  Rng rng(seed);
  Tensor cond;
  {
    Tape tape(false);
    cond = encode_trajectory(tape, model.encoder, traj).value();
  }
  Tensor state = gaussian_like(alpha, model.dim(), rng);
  for (std::size_t g = model.schedule.steps(); g >= 1; --g) {
    state = reverse_step(model, cond, state, g, rng, g == 1 ? 0.0 : 1.0);
  }
  const std::size_t d = model.dim();
  auto norm = [d](const double* v) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += v[c] * v[c];
    return std::sqrt(s);
  };
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  pairs.reserve(alpha * n);
  for (std::size_t a = 0; a < alpha; ++a) {
    const double na = norm(state.row(a));
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += state(a, c) * cond(i, c);
      const double den = na * norm(cond.row(i));
      pairs.emplace_back(den > 0.0 ? dot / den : 0.0, a, i);
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    if (std::get<1>(x) != std::get<1>(y)) return std::get<1>(x) < std::get<1>(y);
    return std::get<2>(x) < std::get<2>(y);
  });
  std::vector<std::uint8_t> gen_used(alpha, 0);
  std::size_t taken = 0;
  for (const auto& [score, a, i] : pairs) {
    if (gen_used[a] || out.labels[i]) continue;
    gen_used[a] = 1;
    out.labels[i] = 1;
    if (++taken == alpha) break;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (out.labels[i]) out.selected.push_back(i);
  return out;
}

}  // namespace mlsimp
