#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "trustgnn/graph.hpp"

namespace trustgnn::eval {

using graph::RelationId;

// Categorical-to-scalar map used for MAE. Four levels use
// {0.1, 0.4, 0.7, 0.9}; other level counts are spaced evenly over [0.1, 0.9].
double level_scalar(RelationId level, std::size_t num_relations);

struct EvalRecord {
  std::vector<RelationId> truth;
  std::vector<RelationId> predicted;
};

struct Metrics {
  double micro_f1 = 0.0;
  double mae = 0.0;
  std::vector<double> per_class_f1;
  std::vector<double> loss_history;      // training loss per epoch
  std::vector<double> val_loss_history;  // empty without a validation carve-out
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double runtime_seconds = 0.0;
};

// micro-F1 from pooled TP/FP/FN, per-class F1 (0 when a class is neither
// present nor predicted) and argmax-class MAE. Throws DataError on length
// mismatch or an out-of-range id.
Metrics compute_metrics(const EvalRecord& record, std::size_t num_relations);

double accuracy(const EvalRecord& record);

}  // namespace trustgnn::eval
