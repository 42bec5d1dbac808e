#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mlsimp/ad/tensor.hpp"

namespace mlsimp::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Raised when an op produces a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reverse-mode recording of one forward pass. Ops append nodes in execution
/// order; backward() visits them in exact reverse and accumulates additively.
class Tape {
 public:
  /// Receives the upstream gradient of the node; adds into parents via grad_of().
  using Backward = std::function<void(Tape&, const Tensor& upstream)>;

  /// With `track_gradients` false parameters enter as constants and no
  /// backward closures are kept.
  explicit Tape(bool track_gradients = true) : track_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter; repeated calls for the same parameter share one node.
  Var param(Parameter& p);

  /// Appends a computed node. `parents` decide whether it needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, Backward backward);
  Var record(Tensor value, std::span<const Var> parents, Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(const Var& v) const { return nodes_[v.id()].needs_grad; }
  /// Gradient buffer of a node, allocated (zeros) on first access.
  Tensor& grad_of(const Var& v);
  const Tensor& grad(const Var& v) const { return nodes_[v.id()].grad; }

  /// Throws std::invalid_argument unless `loss` is a single element tensor.
  /// Parameter gradients are added into Parameter::grad.
  void backward(const Var& loss);

  std::size_t size() const { return nodes_.size(); }
  bool tracking() const { return track_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  bool track_ = true;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace mlsimp::ad
