#include "trustgnn/train.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "trustgnn/error.hpp"

namespace trustgnn::train {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size()) {
    throw UsageError("invalid value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw UsageError("invalid configuration: " + what); };
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be positive");
  if (node_attr_dim == 0) fail("d_attr must be positive");
  if (edge_attr_width == 0) fail("d_edge_attr must be positive");
  if (dim == 0 || dim % 2 != 0) fail("dim must be positive and even, got " + std::to_string(dim));
  if (max_chain_length == 0) fail("K must be positive");
  if (epochs == 0) fail("epochs must be positive");
  if (!(val_fraction >= 0.0 && val_fraction < 0.5)) fail("val_fraction must be in [0, 0.5)");
  if (repeats == 0) fail("repeats must be positive");
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) fail("train_ratio must be in (0, 1)");
  if (clip_norm && !(*clip_norm > 0.0)) fail("clip_norm must be positive");
  if (workers == 0) fail("workers must be positive");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "lr",      "d_attr",   "d_edge_attr", "dim",       "K",           "chain_mode", "epochs",    "patience",
      "val_fraction", "seed", "variant",   "repeats",    "edge_attr", "train_ratio", "clip_norm", "workers"};
  return keys;
}

bool apply_setting(TrainConfig& c, std::string_view key, std::string_view value) {
  if (key == "lr") {
    c.lr = parse_number<double>(key, value);
  } else if (key == "d_attr") {
    c.node_attr_dim = parse_number<std::size_t>(key, value);
  } else if (key == "d_edge_attr") {
    c.edge_attr_width = parse_number<std::size_t>(key, value);
  } else if (key == "dim") {
    c.dim = parse_number<std::size_t>(key, value);
  } else if (key == "K") {
    c.max_chain_length = parse_number<std::size_t>(key, value);
  } else if (key == "chain_mode") {
    c.chain_mode = graph::parse_chain_mode(value);
  } else if (key == "epochs") {
    c.epochs = parse_number<std::size_t>(key, value);
  } else if (key == "patience") {
    c.patience = parse_number<std::size_t>(key, value);
  } else if (key == "val_fraction") {
    c.val_fraction = parse_number<double>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "variant") {
    c.variant = model::parse_variant(value);
  } else if (key == "repeats") {
    c.repeats = parse_number<std::size_t>(key, value);
  } else if (key == "edge_attr") {
    c.edge_attr = model::parse_edge_attr_mode(value);
  } else if (key == "train_ratio") {
    c.train_ratio = parse_number<double>(key, value);
  } else if (key == "clip_norm") {
    if (value == "none" || value.empty()) {
      c.clip_norm.reset();
    } else {
      c.clip_norm = parse_number<double>(key, value);
    }
  } else if (key == "workers") {
    c.workers = parse_number<std::size_t>(key, value);
  } else {
    return false;
  }
  return true;
}

std::string get_setting(const TrainConfig& c, std::string_view key) {
  if (key == "lr") return format_double(c.lr);
  if (key == "d_attr") return std::to_string(c.node_attr_dim);
  if (key == "d_edge_attr") return std::to_string(c.edge_attr_width);
  if (key == "dim") return std::to_string(c.dim);
  if (key == "K") return std::to_string(c.max_chain_length);
  if (key == "chain_mode") return graph::to_string(c.chain_mode);
  if (key == "epochs") return std::to_string(c.epochs);
  if (key == "patience") return std::to_string(c.patience);
  if (key == "val_fraction") return format_double(c.val_fraction);
  if (key == "seed") return std::to_string(c.seed);
  if (key == "variant") return model::to_string(c.variant);
  if (key == "repeats") return std::to_string(c.repeats);
  if (key == "edge_attr") return model::to_string(c.edge_attr);
  if (key == "train_ratio") return format_double(c.train_ratio);
  if (key == "clip_norm") return c.clip_norm ? format_double(*c.clip_norm) : "none";
  if (key == "workers") return std::to_string(c.workers);
  throw UsageError("unknown configuration key '" + std::string(key) + "'");
}

model::ModelConfig model_config(const TrainConfig& config, const TrustGraph& g) {
  model::ModelConfig mc;
  mc.num_nodes = g.num_nodes();
  mc.num_relations = g.num_relations();
  mc.node_attr_dim = config.node_attr_dim;
  mc.edge_attr_width = config.edge_attr_width;
  mc.dim = config.dim;
  mc.variant = config.variant;
  mc.edge_attr = config.edge_attr;
  mc.chains = graph::enumerate_chain_types(g.num_relations(), config.max_chain_length, config.chain_mode);
  return mc;
}

std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  // splitmix64 finaliser over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(stream) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DataSplit make_split(const TrustGraph& g, const TrainConfig& config) {
  auto outer = graph::split_edges(g, config.train_ratio, derive_seed(config.seed, SeedStream::split));
  DataSplit out;
  out.test = std::move(outer.test);
  const auto n_val = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(outer.train.size())));
  if (n_val == 0) {
    out.fit = std::move(outer.train);
    return out;
  }
  if (n_val >= outer.train.size()) throw DataError("validation carve-out leaves no training edges");
  std::mt19937_64 rng(derive_seed(config.seed, SeedStream::validation));
  std::shuffle(outer.train.begin(), outer.train.end(), rng);
  out.val.assign(outer.train.begin(), outer.train.begin() + static_cast<std::ptrdiff_t>(n_val));
  out.fit.assign(outer.train.begin() + static_cast<std::ptrdiff_t>(n_val), outer.train.end());
  return out;
}

FitResult fit(const model::ModelConfig& mc, const TrustGraph& message_graph, std::span<const Edge> fit_edges,
              std::span<const Edge> val_edges, const TrainConfig& config, ParamStore init,
              const EpochCallback& on_epoch) {
  config.validate();
  model::validate_params(mc, init);
  if (fit_edges.empty()) throw DataError("no training edges");

  nd::AdamState adam;
  adam.config.lr = config.lr;
  adam.config.clip_norm = config.clip_norm;

  FitResult out;
  out.params = init;
  ParamStore params = std::move(init);
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    nd::Tape tape;
    const auto vars = nd::bind_leaves(tape, params);
    const auto state = model::forward(mc, message_graph, tape, vars);
    const nd::Var loss = model::model_loss(state, fit_edges, vars);
    const double loss_v = loss.value().item();
    std::optional<double> val_v;
    if (!val_edges.empty()) val_v = model::model_loss(state, val_edges, vars).value().item();
    if (!std::isfinite(loss_v) || (val_v && !std::isfinite(*val_v))) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": loss " + format_double(loss_v) +
                         (val_v ? ", validation loss " + format_double(*val_v) : std::string()) +
                         "; try a smaller lr or set clip_norm");
    }
    out.loss_history.push_back(loss_v);
    if (val_v) out.val_history.push_back(*val_v);
    out.epochs_run = epoch;

    // The score belongs to the parameters before this epoch's update.
    const double score = val_v.value_or(loss_v);
    const bool improved = score < best;
    if (improved) {
      best = score;
      out.params = params;
      out.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (on_epoch) on_epoch(EpochLog{epoch, loss_v, val_v, improved});
    if (config.patience > 0 && since_best >= config.patience) break;

    tape.backward(loss);
    nd::adam_step(params, nd::collect_grads(tape, vars), adam);
  }
  out.best_score = best;
  return out;
}

Tensor embed(const model::ModelConfig& mc, const TrustGraph& message_graph, const ParamStore& params) {
  nd::Tape tape(false);
  return model::forward(mc, message_graph, tape, nd::bind_constants(tape, params)).z_final.value();
}

eval::EvalRecord predict_edges(const Tensor& embeddings, const ParamStore& params, std::span<const Edge> edges) {
  nd::Tape tape(false);
  nd::VarMap mlp;
  for (const char* name : {model::names::kMlpW1, model::names::kMlpB1, model::names::kMlpW2, model::names::kMlpB2})
    mlp.emplace(name, tape.constant(params.at(name)));
  const Tensor logits = model::pair_logits(tape.constant(embeddings), edges, mlp).value();
  eval::EvalRecord rec;
  rec.truth.reserve(edges.size());
  rec.predicted.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto row = logits.row(i);
    rec.truth.push_back(edges[i].rel);
    rec.predicted.push_back(static_cast<graph::RelationId>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return rec;
}

Metrics evaluate(const model::ModelConfig& mc, const ParamStore& params, const TrustGraph& message_graph,
                 std::span<const Edge> test_edges) {
  if (test_edges.empty()) throw DataError("evaluation needs at least one test edge");
  const Tensor z = embed(mc, message_graph, params);
  return eval::compute_metrics(predict_edges(z, params, test_edges), mc.num_relations);
}

RunResult train(const TrustGraph& g, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const auto start = Clock::now();
  RunResult out;
  out.split = make_split(g, config);
  const TrustGraph message_graph = g.with_edges(out.split.fit);
  const auto mc = model_config(config, g);
  FitResult fitted = fit(mc, message_graph, out.split.fit, out.split.val, config,
                         model::init_params(mc, derive_seed(config.seed, SeedStream::init)), on_epoch);

  out.model.config = config;
  out.model.model = mc;
  out.model.params = std::move(fitted.params);
  out.model.embeddings = embed(mc, message_graph, out.model.params);
  out.metrics = eval::compute_metrics(predict_edges(out.model.embeddings, out.model.params, out.split.test),
                                      mc.num_relations);
  out.metrics.loss_history = std::move(fitted.loss_history);
  out.metrics.val_loss_history = std::move(fitted.val_history);
  out.metrics.best_epoch = fitted.best_epoch;
  out.metrics.epochs_run = fitted.epochs_run;
  out.metrics.runtime_seconds = seconds_since(start);
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

RepeatReport repeat_runs(const TrustGraph& g, const TrainConfig& config, std::size_t n, const RunCallback& on_run,
                         bool keep_first) {
  if (n == 0) throw UsageError("repeat_runs needs at least one run");
  config.validate();
  const auto start = Clock::now();
  RepeatReport report;
  report.config = config;
  report.runs.resize(n);

  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      RunOutcome& slot = report.runs[i];
      TrainConfig c = config;
      c.seed = config.seed + i;
      slot.seed = c.seed;
      try {
        RunResult run = train(g, c);
        slot.metrics = run.metrics;
        if (i == 0 && keep_first) report.first = std::move(run);
      } catch (const Error& e) {
        slot.error = e.what();
      }
      if (on_run) {
        std::lock_guard lock(callback_mutex);
        on_run(slot);
      }
    }
  };
  const std::size_t threads = std::min(config.workers, n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<double> f1, mae;
  for (const auto& r : report.runs) {
    if (!r.metrics) {
      ++report.failures;
      continue;
    }
    f1.push_back(r.metrics->micro_f1);
    mae.push_back(r.metrics->mae);
  }
  if (!f1.empty()) {
    report.micro_f1 = mean_std(f1);
    report.mae = mean_std(mae);
  }
  report.runtime_seconds = seconds_since(start);
  return report;
}

std::string format_pm(const MeanStd& v, bool percent) {
  char buf[64];
  if (percent) {
    std::snprintf(buf, sizeof buf, "%.1f%%±%.1f%%", 100.0 * v.mean, 100.0 * v.std);
  } else {
    std::snprintf(buf, sizeof buf, "%.3f±%.3f", v.mean, v.std);
  }
  return buf;
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::K: return "K";
    case SweepAxis::node_dim: return "node_dim";
    case SweepAxis::edge_dim: return "edge_dim";
    case SweepAxis::train_ratio: return "train_ratio";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view s) {
  for (SweepAxis a : {SweepAxis::K, SweepAxis::node_dim, SweepAxis::edge_dim, SweepAxis::train_ratio}) {
    if (s == to_string(a)) return a;
  }
  throw UsageError("unknown sweep axis '" + std::string(s) + "' (expected K, node_dim, edge_dim or train_ratio)");
}

TrainConfig with_axis_value(TrainConfig config, SweepAxis axis, double value) {
  auto as_count = [&] {
    if (!(value >= 1.0) || value != std::floor(value)) {
      throw UsageError("sweep value " + format_double(value) + " for " + to_string(axis) + " must be a positive integer");
    }
    return static_cast<std::size_t>(value);
  };
  switch (axis) {
    case SweepAxis::K: config.max_chain_length = as_count(); break;
    case SweepAxis::node_dim: config.node_attr_dim = as_count(); break;
    case SweepAxis::edge_dim: config.edge_attr_width = as_count(); break;
    case SweepAxis::train_ratio: config.train_ratio = value; break;
  }
  config.validate();
  return config;
}

std::vector<SweepCell> sweep(const TrustGraph& g, const TrainConfig& base, SweepAxis axis,
                             std::span<const double> values, const RunCallback& on_run) {
  if (values.empty()) throw UsageError("sweep needs at least one value");
  std::vector<SweepCell> cells;
  for (double v : values) {
    SweepCell cell;
    cell.value = v;
    try {
      const TrainConfig c = with_axis_value(base, axis, v);
      cell.report = repeat_runs(g, c, c.repeats, on_run);
    } catch (const Error& e) {
      cell.error = e.what();
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

Explanation explain(const model::ModelConfig& mc, const ParamStore& params, const TrustGraph& message_graph,
                    std::size_t top_k) {
  model::validate_params(mc, params);
  nd::Tape tape(false);
  const auto st = model::forward(mc, message_graph, tape, nd::bind_constants(tape, params));
  const std::size_t j_count = mc.chains.size();

  auto weights = [&](const nd::Var& w, bool used) -> std::vector<std::optional<double>> {
    std::vector<std::optional<double>> out(j_count);
    if (!used) return out;
    for (std::size_t j = 0; j < j_count; ++j) {
      out[j] = mc.variant == model::Variant::uniform_sum ? 1.0 / static_cast<double>(j_count) : w.value()[j];
    }
    return out;
  };
  const auto alpha = weights(st.alpha, mc.uses_trustee());
  const auto alpha_bar = weights(st.alpha_bar, mc.uses_trustor());

  Explanation out;
  out.ranked.reserve(j_count);
  for (std::size_t j = 0; j < j_count; ++j)
    out.ranked.push_back({mc.chains.types[j], mc.chains.types[j].label(), alpha[j], alpha_bar[j]});
  const bool by_trustee = mc.uses_trustee();
  std::stable_sort(out.ranked.begin(), out.ranked.end(), [&](const ExplanationRow& a, const ExplanationRow& b) {
    return by_trustee ? *a.alpha > *b.alpha : *a.alpha_bar > *b.alpha_bar;
  });

  out.top_k = top_k;
  if (top_k > j_count) {
    out.warning = "top_k " + std::to_string(top_k) + " exceeds the " + std::to_string(j_count) +
                  " chain types; clamped";
    out.top_k = j_count;
  }
  return out;
}

}  // namespace trustgnn::train
