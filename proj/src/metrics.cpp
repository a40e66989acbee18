#include "trustgnn/metrics.hpp"

#include <cmath>

#include "trustgnn/error.hpp"

namespace trustgnn::eval {

double level_scalar(RelationId level, std::size_t num_relations) {
  static constexpr double kFour[] = {0.1, 0.4, 0.7, 0.9};
  if (level >= num_relations) throw DataError("level " + std::to_string(level) + " out of range");
  if (num_relations == 4) return kFour[level];
  if (num_relations == 1) return 0.5;
  return 0.1 + 0.8 * static_cast<double>(level) / static_cast<double>(num_relations - 1);
}

namespace {

void check_record(const EvalRecord& r, std::size_t num_relations) {
  if (r.truth.size() != r.predicted.size()) {
    throw DataError("evaluation record has " + std::to_string(r.truth.size()) + " labels but " +
                    std::to_string(r.predicted.size()) + " predictions");
  }
  for (std::size_t i = 0; i < r.truth.size(); ++i) {
    if (r.truth[i] >= num_relations || r.predicted[i] >= num_relations) {
      throw DataError("evaluation record entry " + std::to_string(i) + " is outside [0, " +
                      std::to_string(num_relations) + ")");
    }
  }
}

}  // namespace

double accuracy(const EvalRecord& record) {
  if (record.truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < record.truth.size(); ++i) hits += record.truth[i] == record.predicted[i];
  return static_cast<double>(hits) / static_cast<double>(record.truth.size());
}

Metrics compute_metrics(const EvalRecord& record, std::size_t num_relations) {
  check_record(record, num_relations);
  std::vector<std::size_t> tp(num_relations), fp(num_relations), fn(num_relations);
  double abs_err = 0.0;
  for (std::size_t i = 0; i < record.truth.size(); ++i) {
    const auto t = record.truth[i];
    const auto p = record.predicted[i];
    if (t == p) {
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
    abs_err += std::abs(level_scalar(p, num_relations) - level_scalar(t, num_relations));
  }

  Metrics m;
  std::size_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
  m.per_class_f1.resize(num_relations);
  for (std::size_t c = 0; c < num_relations; ++c) {
    tp_sum += tp[c];
    fp_sum += fp[c];
    fn_sum += fn[c];
    const std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
    m.per_class_f1[c] = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
  }
  const std::size_t denom = 2 * tp_sum + fp_sum + fn_sum;
  m.micro_f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp_sum) / static_cast<double>(denom);
  m.mae = record.truth.empty() ? 0.0 : abs_err / static_cast<double>(record.truth.size());
  return m;
}

}  // namespace trustgnn::eval
