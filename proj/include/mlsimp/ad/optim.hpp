#pragma once

#include <cstdint>
#include <vector>

#include "mlsimp/ad/tensor.hpp"

namespace mlsimp::ad {

/// w -= lr * grad for every parameter that requires a gradient.
void sgd_step(const ParameterList& params, double lr);

void zero_grad(const ParameterList& params);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected moments.
class Adam {
 public:
  Adam(ParameterList params, AdamOptions options = {});
  void step();
  void zero_grad();
  std::uint64_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

 private:
  ParameterList params_;
  AdamOptions options_;
  std::vector<Tensor> m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace mlsimp::ad
