#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "trustgnn/train.hpp"

namespace trustgnn::report {

using nlohmann::json;

json config_json(const train::TrainConfig& c);
// Keys missing from `j` keep their defaults; unknown keys throw DataError.
train::TrainConfig config_from_json(const json& j);

json metrics_json(const eval::Metrics& m);
json repeat_json(const train::RepeatReport& r);
json sweep_json(const train::TrainConfig& base, train::SweepAxis axis, const std::vector<train::SweepCell>& cells);
json explanation_json(const train::Explanation& e);
// Header `chain_label,alpha,alpha_bar`; missing weights are empty fields.
std::string explanation_csv(const train::Explanation& e);

// e.g. metrics_full_seed7.json
std::string file_stem(const std::string& kind, const train::TrainConfig& c);

// Writes to a temporary sibling and renames it into place.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Pretty JSON with a trailing newline.
std::string dump(const json& j);

struct Checkpoint {
  train::TrainConfig config;
  model::ModelConfig model;
  nd::ParamStore params;
  nd::Tensor embeddings;  // Z_final over the message-passing graph
  std::string node_fingerprint;
  std::string dataset;  // as given at training time, informational
};

inline constexpr int kCheckpointVersion = 1;

json checkpoint_json(const Checkpoint& c);
// Validates version, chain index and every parameter shape; mismatches raise ShapeError
// with a per-parameter diff, malformed documents DataError.
Checkpoint checkpoint_from_json(const json& j);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace trustgnn::report
