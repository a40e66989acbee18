#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "trustgnn/tape.hpp"
#include "trustgnn/tensor.hpp"

namespace trustgnn::nd {

// Named parameter tensors. Ordered by name so iteration (and serialization) is deterministic.
using ParamStore = std::map<std::string, Tensor>;
using GradMap = std::map<std::string, Tensor>;
using VarMap = std::map<std::string, Var>;

// Records every parameter as a gradient-requiring leaf on `tape`.
VarMap bind_leaves(Tape& tape, const ParamStore& params);
// Records every parameter as a constant (inference).
VarMap bind_constants(Tape& tape, const ParamStore& params);
GradMap collect_grads(const Tape& tape, const VarMap& leaves);

struct AdamConfig {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::optional<double> clip_norm;  // global L2 clip; off by default
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

// Bias-corrected Adam update. Parameters without a gradient entry are treated
// as having a zero gradient.
void adam_step(ParamStore& params, const GradMap& grads, AdamState& state);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

using LossFn = std::function<Var(Tape&, const VarMap&)>;

struct GradCheckOptions {
  double eps = 1e-6;
  // Coordinates per parameter beyond which sampling kicks in.
  std::size_t max_coords_per_param = 200;
  std::uint64_t seed = 0;
  double denom_floor = 1e-8;
};

// Central-difference gradient check of `fn` against Tape::backward.
// Throws NumericError when two forward passes at the same point disagree.
GradCheckReport finite_diff_check(const LossFn& fn, const ParamStore& params, const GradCheckOptions& options = {});

}  // namespace trustgnn::nd
