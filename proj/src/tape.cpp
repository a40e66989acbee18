#include "trustgnn/tape.hpp"

#include "trustgnn/error.hpp"

namespace trustgnn::nd {

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw Error("Var::value on an unbound variable");
  return tape_->value(id_);
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), nullptr, true, std::nullopt, "leaf"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), nullptr, false, std::nullopt, "constant"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward, const char* op) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward), op);
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward, const char* op) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) throw Error(std::string(op) + ": input recorded on a different tape");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  if (check_finite_ && !value.all_finite()) {
    throw NumericError(std::string(op) + ": non-finite value in output " + shape_str(value.shape()));
  }
  nodes_.push_back(Node{std::move(value), needs ? std::move(backward) : nullptr, needs, std::nullopt, op});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_slot(const Var& v) {
  Node& n = nodes_[v.id()];
  if (!n.grad) n.grad.emplace(n.value.rows(), n.value.cols());
  return *n.grad;
}

void Tape::accumulate(const Var& v, const Tensor& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (!n.grad) {
    require_same_shape(n.value, g, "gradient accumulate");
    n.grad = g;
  } else {
    *n.grad += g;
  }
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw Error("backward: loss recorded on a different tape");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.size() != 1) throw ShapeError("backward: loss must be scalar, got " + shape_str(lv.shape()));
  for (Node& n : nodes_) n.grad.reset();
  nodes_[loss.id()].grad = Tensor::scalar(1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.grad || !n.backward) continue;
    // Intermediate gradients are released once consumed; only leaves keep theirs.
    const Tensor g = std::move(*n.grad);
    n.grad.reset();
    if (check_finite_ && !g.all_finite()) {
      throw NumericError(std::string(n.op) + ": non-finite gradient");
    }
    n.backward(*this, g);
  }
}

Tensor Tape::grad(const Var& v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad) return *n.grad;
  return Tensor(n.value.rows(), n.value.cols());
}

}  // namespace trustgnn::nd
