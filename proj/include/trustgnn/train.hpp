#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trustgnn/graph.hpp"
#include "trustgnn/metrics.hpp"
#include "trustgnn/model.hpp"

namespace trustgnn::train {

using eval::Metrics;
using graph::Edge;
using graph::TrustGraph;
using nd::ParamStore;
using nd::Tensor;

struct TrainConfig {
  double lr = 0.005;
  std::size_t node_attr_dim = 1024;
  std::size_t edge_attr_width = 1024;
  std::size_t dim = 128;
  std::size_t max_chain_length = 2;
  graph::ChainMode chain_mode = graph::ChainMode::upto_k;
  std::size_t epochs = 200;
  std::size_t patience = 20;  // 0 disables early stopping
  double val_fraction = 0.1;  // of the training split
  std::uint64_t seed = 0;
  model::Variant variant = model::Variant::full;
  std::size_t repeats = 20;
  model::EdgeAttrMode edge_attr = model::EdgeAttrMode::learnable;
  double train_ratio = 0.8;
  std::optional<double> clip_norm;
  std::size_t workers = 1;

  // Throws UsageError naming the offending field.
  void validate() const;
};

// Flat key=value names, as used by config files and command-line flags.
const std::vector<std::string>& config_keys();
// Returns false for an unknown key; throws UsageError for a malformed value.
bool apply_setting(TrainConfig& config, std::string_view key, std::string_view value);
std::string get_setting(const TrainConfig& config, std::string_view key);

model::ModelConfig model_config(const TrainConfig& config, const TrustGraph& g);

// Independent streams derived from one seed.
enum class SeedStream : std::uint64_t { split = 0, validation = 1, init = 2 };
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream);

// train/test split of the edges, then a validation carve-out of the training part.
// Message passing only ever sees `fit`.
struct DataSplit {
  std::vector<Edge> fit;
  std::vector<Edge> val;
  std::vector<Edge> test;
};

DataSplit make_split(const TrustGraph& g, const TrainConfig& config);

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> val_loss;
  bool improved = false;
};
using EpochCallback = std::function<void(const EpochLog&)>;

struct FitResult {
  ParamStore params;  // best by validation loss (training loss without a carve-out)
  std::vector<double> loss_history;
  std::vector<double> val_history;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double best_score = 0.0;
};

// Full-batch Adam on `fit_edges`. Throws NumericError when the loss diverges.
FitResult fit(const model::ModelConfig& mc, const TrustGraph& message_graph, std::span<const Edge> fit_edges,
              std::span<const Edge> val_edges, const TrainConfig& config, ParamStore init,
              const EpochCallback& on_epoch = {});

// Z_final for every node.
Tensor embed(const model::ModelConfig& mc, const TrustGraph& message_graph, const ParamStore& params);

eval::EvalRecord predict_edges(const Tensor& embeddings, const ParamStore& params, std::span<const Edge> edges);

// Pure: the same inputs give identical metrics. Throws DataError on an empty edge set.
Metrics evaluate(const model::ModelConfig& mc, const ParamStore& params, const TrustGraph& message_graph,
                 std::span<const Edge> test_edges);

struct TrainedModel {
  TrainConfig config;
  model::ModelConfig model;
  ParamStore params;
  Tensor embeddings;
};

struct RunResult {
  TrainedModel model;
  DataSplit split;
  Metrics metrics;  // on the test split, plus the training histories
};

RunResult train(const TrustGraph& g, const TrainConfig& config, const EpochCallback& on_epoch = {});

struct RunOutcome {
  std::uint64_t seed = 0;
  std::optional<Metrics> metrics;
  std::string error;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
};

MeanStd mean_std(std::span<const double> values);

struct RepeatReport {
  TrainConfig config;
  std::vector<RunOutcome> runs;
  std::size_t failures = 0;
  std::optional<MeanStd> micro_f1;  // empty when every run failed
  std::optional<MeanStd> mae;
  double runtime_seconds = 0.0;
  std::optional<RunResult> first;  // the base-seed run, when requested
};

using RunCallback = std::function<void(const RunOutcome&)>;

// n runs with seeds seed, seed + 1, ...; config.workers runs at a time.
RepeatReport repeat_runs(const TrustGraph& g, const TrainConfig& config, std::size_t n,
                         const RunCallback& on_run = {}, bool keep_first = false);

// "74.4%±0.1%" for fractions, "0.081±0.002" otherwise.
std::string format_pm(const MeanStd& v, bool percent);

enum class SweepAxis { K, node_dim, edge_dim, train_ratio };
std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view s);
TrainConfig with_axis_value(TrainConfig config, SweepAxis axis, double value);

struct SweepCell {
  double value = 0.0;
  std::optional<RepeatReport> report;
  std::string error;
};

std::vector<SweepCell> sweep(const TrustGraph& g, const TrainConfig& base, SweepAxis axis,
                             std::span<const double> values, const RunCallback& on_run = {});

struct ExplanationRow {
  graph::ChainType chain;
  std::string label;
  std::optional<double> alpha;  // empty when the variant lacks the role
  std::optional<double> alpha_bar;
};

struct Explanation {
  std::vector<ExplanationRow> ranked;  // every chain type, by weight descending
  std::size_t top_k = 0;
  std::optional<std::string> warning;
};

// Weights of the trustee role rank the types (trustor weights for TrustGNN-2).
// TrustGNN-3 reports its constant weights normalised to 1/J.
Explanation explain(const model::ModelConfig& mc, const ParamStore& params, const TrustGraph& message_graph,
                    std::size_t top_k);

}  // namespace trustgnn::train
