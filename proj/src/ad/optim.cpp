#include "mlsimp/ad/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace mlsimp::ad {

namespace {

void check_grad(const Parameter& p) {
  if (p.grad.size() != p.value.size()) throw std::invalid_argument("gradient shape mismatch for " + p.name);
}

}  // namespace

void sgd_step(const ParameterList& params, double lr) {
  for (Parameter* p : params) {
    if (!p->requires_grad) continue;
    check_grad(*p);
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr * p->grad[i];
  }
}

void zero_grad(const ParameterList& params) {
  for (Parameter* p : params) p->zero_grad();
}

Adam::Adam(ParameterList params, AdamOptions options) : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (!p.requires_grad) continue;
    check_grad(p);
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
      p.value[i] -= options_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + options_.eps);
    }
  }
}

void Adam::zero_grad() { ad::zero_grad(params_); }

}  // namespace mlsimp::ad
