#include "mlsimp/ad/tape.hpp"

namespace mlsimp::ad {

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  nodes_.push_back(Node{p.value, {}, {}, track_ ? &p : nullptr, track_ && p.requires_grad});
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, Backward backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> parents, Backward backward) {
  if (!value.all_finite()) throw NumericError("non-finite value produced on the tape");
  bool needs = false;
  for (const Var& p : parents) needs = needs || nodes_[p.id()].needs_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_of(const Var& v) {
  Node& n = nodes_[v.id()];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw std::invalid_argument("loss belongs to another tape");
  if (nodes_[loss.id()].value.size() != 1) throw std::invalid_argument("backward needs a scalar loss");
  grad_of(loss).fill(1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward) {
      // Parents always precede their child, so n.grad is not written here.
      n.backward(*this, n.grad);
    }
    if (n.param) {
      Tensor& g = n.param->grad;
      if (g.size() != n.grad.size()) g = Tensor(n.param->value.shape());
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
    }
  }
}

}  // namespace mlsimp::ad
