#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "trustgnn/tensor.hpp"

namespace trustgnn::nd {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Shape shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records operations in execution order. Node ids increase monotonically, so
// walking ids downwards from the loss is a reverse topological order.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

#ifdef NDEBUG
  static constexpr bool kCheckFiniteDefault = false;
#else
  static constexpr bool kCheckFiniteDefault = true;
#endif

  explicit Tape(bool check_finite = kCheckFiniteDefault) : check_finite_(check_finite) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);
  Var constant(Tensor value);
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward, const char* op);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward, const char* op);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Adds g into the gradient slot of v. No-op for values that do not require grad.
  void accumulate(const Var& v, const Tensor& g);
  // Zero-initialised gradient slot for in-place accumulation by kernels.
  Tensor& grad_slot(const Var& v);

  // Fills gradients for every node reachable from `loss`, which must be 1x1.
  void backward(const Var& loss);

  // Gradient of the last backward() with respect to v; zeros if v was not reached.
  Tensor grad(const Var& v) const;

 private:
  struct Node {
    Tensor value;
    BackwardFn backward;
    bool requires_grad = false;
    std::optional<Tensor> grad;
    const char* op = "leaf";
  };

  std::deque<Node> nodes_;
  bool check_finite_;
};

}  // namespace trustgnn::nd
