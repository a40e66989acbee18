#include "trustgnn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "trustgnn/error.hpp"

namespace trustgnn::nd {

VarMap bind_leaves(Tape& tape, const ParamStore& params) {
  VarMap out;
  for (const auto& [name, value] : params) out.emplace(name, tape.leaf(value));
  return out;
}

VarMap bind_constants(Tape& tape, const ParamStore& params) {
  VarMap out;
  for (const auto& [name, value] : params) out.emplace(name, tape.constant(value));
  return out;
}

GradMap collect_grads(const Tape& tape, const VarMap& leaves) {
  GradMap out;
  for (const auto& [name, var] : leaves) out.emplace(name, tape.grad(var));
  return out;
}

void adam_step(ParamStore& params, const GradMap& grads, AdamState& state) {
  const AdamConfig& c = state.config;
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw ShapeError("adam_step: gradient for unknown parameter '" + name + "'");
    require_same_shape(it->second, g, ("adam_step(" + name + ")").c_str());
  }

  double clip = 1.0;
  if (c.clip_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads)
      for (double v : g.data()) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > *c.clip_norm) clip = *c.clip_norm / norm;
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(c.beta1, t);
  const double corr2 = 1.0 - std::pow(c.beta2, t);

  for (auto& [name, p] : params) {
    auto [mit, m_new] = state.m.try_emplace(name, p.rows(), p.cols());
    auto [vit, v_new] = state.v.try_emplace(name, p.rows(), p.cols());
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    require_same_shape(m, p, "adam_step moment");
    auto git = grads.find(name);
    const Tensor* g = git == grads.end() ? nullptr : &git->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g ? (*g)[i] * clip : 0.0;
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
      const double mhat = m[i] / corr1;
      const double vhat = v[i] / corr2;
      p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

namespace {

double eval_loss(const LossFn& fn, const ParamStore& params) {
  Tape tape(false);
  VarMap vars = bind_constants(tape, params);
  Var loss = fn(tape, vars);
  return loss.value().item();
}

}  // namespace

GradCheckReport finite_diff_check(const LossFn& fn, const ParamStore& params, const GradCheckOptions& options) {
  GradMap analytic;
  double base = 0.0;
  {
    Tape tape(false);
    VarMap leaves = bind_leaves(tape, params);
    Var loss = fn(tape, leaves);
    base = loss.value().item();
    tape.backward(loss);
    analytic = collect_grads(tape, leaves);
  }
  if (eval_loss(fn, params) != base) {
    throw NumericError("finite_diff_check: function is not deterministic (two forward passes disagree)");
  }

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  ParamStore work = params;
  for (auto& [name, value] : work) {
    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    const Tensor& ga = analytic.at(name);
    for (std::size_t i : coords) {
      const double orig = value[i];
      value[i] = orig + options.eps;
      const double up = eval_loss(fn, work);
      value[i] = orig - options.eps;
      const double down = eval_loss(fn, work);
      value[i] = orig;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double a = ga[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.denom_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_error || report.worst_param.empty()) {
        if (rel >= report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_param = name;
          report.worst_index = i;
          report.worst_analytic = a;
          report.worst_numeric = numeric;
        }
      }
    }
  }
  return report;
}

}  // namespace trustgnn::nd
