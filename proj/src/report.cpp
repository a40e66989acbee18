#include "trustgnn/report.hpp"

#include <fstream>
#include <sstream>

#include "trustgnn/error.hpp"

namespace trustgnn::report {

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json tensor_json(const nd::Tensor& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = t.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

nd::Tensor tensor_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw DataError(what + ": expected a nested array");
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j.front().size();
  nd::Tensor t(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != cols) throw DataError(what + ": ragged row " + std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw DataError(what + ": non-numeric entry at row " + std::to_string(r));
      t(r, c) = row[c].get<double>();
    }
  }
  return t;
}

json mean_std_json(const std::optional<train::MeanStd>& v, bool percent) {
  if (!v) return nullptr;
  return {{"mean", v->mean}, {"std", v->std}, {"formatted", train::format_pm(*v, percent)}};
}

template <typename T>
T field(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw DataError(what + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(what + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

json config_json(const train::TrainConfig& c) {
  return {{"lr", c.lr},
          {"d_attr", c.node_attr_dim},
          {"d_edge_attr", c.edge_attr_width},
          {"dim", c.dim},
          {"K", c.max_chain_length},
          {"chain_mode", graph::to_string(c.chain_mode)},
          {"epochs", c.epochs},
          {"patience", c.patience},
          {"val_fraction", c.val_fraction},
          {"seed", c.seed},
          {"variant", model::to_string(c.variant)},
          {"repeats", c.repeats},
          {"edge_attr", model::to_string(c.edge_attr)},
          {"train_ratio", c.train_ratio},
          {"clip_norm", optional_number(c.clip_norm)},
          {"workers", c.workers}};
}

train::TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) throw DataError("configuration must be a JSON object");
  train::TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_null()) {
      text = "none";
    } else if (value.is_number()) {
      text = value.dump();
    } else {
      throw DataError("configuration key '" + key + "' has an unsupported value");
    }
    try {
      if (!train::apply_setting(c, key, text)) throw DataError("unknown configuration key '" + key + "'");
    } catch (const UsageError& e) {
      throw DataError(e.what());
    }
  }
  return c;
}

json metrics_json(const eval::Metrics& m) {
  return {{"micro_f1", m.micro_f1},
          {"mae", m.mae},
          {"per_class_f1", m.per_class_f1},
          {"loss_history", m.loss_history},
          {"val_loss_history", m.val_loss_history},
          {"best_epoch", m.best_epoch},
          {"epochs_run", m.epochs_run},
          {"runtime_seconds", m.runtime_seconds}};
}

json repeat_json(const train::RepeatReport& r) {
  json runs = json::array();
  for (const auto& run : r.runs) {
    json entry = {{"seed", run.seed}};
    if (run.metrics) {
      entry["metrics"] = metrics_json(*run.metrics);
    } else {
      entry["error"] = run.error;
    }
    runs.push_back(std::move(entry));
  }
  return {{"config", config_json(r.config)},
          {"per_run", std::move(runs)},
          {"failures", r.failures},
          {"mean", {{"micro_f1", r.micro_f1 ? json(r.micro_f1->mean) : json(nullptr)},
                    {"mae", r.mae ? json(r.mae->mean) : json(nullptr)}}},
          {"std", {{"micro_f1", r.micro_f1 ? json(r.micro_f1->std) : json(nullptr)},
                   {"mae", r.mae ? json(r.mae->std) : json(nullptr)},
                   {"kind", "sample"}}},
          {"summary", {{"micro_f1", mean_std_json(r.micro_f1, true)}, {"mae", mean_std_json(r.mae, false)}}},
          {"runtime", r.runtime_seconds}};
}

json sweep_json(const train::TrainConfig& base, train::SweepAxis axis, const std::vector<train::SweepCell>& cells) {
  json rows = json::array();
  for (const auto& cell : cells) {
    json row = {{"value", cell.value}};
    if (cell.report) {
      row["report"] = repeat_json(*cell.report);
    } else {
      row["error"] = cell.error;
    }
    rows.push_back(std::move(row));
  }
  return {{"config", config_json(base)}, {"axis", train::to_string(axis)}, {"cells", std::move(rows)}};
}

json explanation_json(const train::Explanation& e) {
  json rows = json::array();
  for (std::size_t i = 0; i < e.ranked.size(); ++i) {
    const auto& row = e.ranked[i];
    rows.push_back({{"rank", i + 1},
                    {"chain", row.chain.rels},
                    {"chain_label", row.label},
                    {"alpha", optional_number(row.alpha)},
                    {"alpha_bar", optional_number(row.alpha_bar)},
                    {"top_k", i < e.top_k}});
  }
  json out = {{"top_k", e.top_k}, {"chains", std::move(rows)}};
  if (e.warning) out["warning"] = *e.warning;
  return out;
}

std::string explanation_csv(const train::Explanation& e) {
  auto num = [](const std::optional<double>& v) { return v ? json(*v).dump() : std::string(); };
  std::string out = "chain_label,alpha,alpha_bar\n";
  for (std::size_t i = 0; i < e.top_k; ++i) {
    const auto& row = e.ranked[i];
    out += row.label + "," + num(row.alpha) + "," + num(row.alpha_bar) + "\n";
  }
  return out;
}

std::string file_stem(const std::string& kind, const train::TrainConfig& c) {
  return kind + "_" + model::to_string(c.variant) + "_seed" + std::to_string(c.seed);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json checkpoint_json(const Checkpoint& c) {
  json types = json::array();
  for (const auto& t : c.model.chains.types) types.push_back(t.rels);
  json params = json::object();
  for (const auto& [name, t] : c.params) params[name] = tensor_json(t);
  return {{"format_version", kCheckpointVersion},
          {"config", config_json(c.config)},
          {"model",
           {{"num_nodes", c.model.num_nodes},
            {"num_relations", c.model.num_relations},
            {"node_attr_dim", c.model.node_attr_dim},
            {"edge_attr_width", c.model.edge_attr_width},
            {"dim", c.model.dim},
            {"variant", model::to_string(c.model.variant)},
            {"edge_attr", model::to_string(c.model.edge_attr)},
            {"unit_eps", c.model.unit_eps}}},
          {"chain_index",
           {{"max_length", c.model.chains.max_length},
            {"mode", graph::to_string(c.model.chains.mode)},
            {"types", std::move(types)}}},
          {"seed", c.config.seed},
          {"dataset", c.dataset},
          {"node_fingerprint", c.node_fingerprint},
          {"params", std::move(params)},
          {"embeddings", tensor_json(c.embeddings)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  const std::string what = "checkpoint";
  if (!j.is_object()) throw DataError("checkpoint must be a JSON object");
  const int version = field<int>(j, "format_version", what);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint format_version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  c.config = config_from_json(field<json>(j, "config", what));
  const json m = field<json>(j, "model", what);
  c.model.num_nodes = field<std::size_t>(m, "num_nodes", "checkpoint model");
  c.model.num_relations = field<std::size_t>(m, "num_relations", "checkpoint model");
  c.model.node_attr_dim = field<std::size_t>(m, "node_attr_dim", "checkpoint model");
  c.model.edge_attr_width = field<std::size_t>(m, "edge_attr_width", "checkpoint model");
  c.model.dim = field<std::size_t>(m, "dim", "checkpoint model");
  c.model.unit_eps = field<double>(m, "unit_eps", "checkpoint model");
  try {
    c.model.variant = model::parse_variant(field<std::string>(m, "variant", "checkpoint model"));
    c.model.edge_attr = model::parse_edge_attr_mode(field<std::string>(m, "edge_attr", "checkpoint model"));
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint model: ") + e.what());
  }

  const json ci = field<json>(j, "chain_index", what);
  c.model.chains.max_length = field<std::size_t>(ci, "max_length", "checkpoint chain_index");
  try {
    c.model.chains.mode = graph::parse_chain_mode(field<std::string>(ci, "mode", "checkpoint chain_index"));
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint chain_index: ") + e.what());
  }
  const json types = field<json>(ci, "types", "checkpoint chain_index");
  for (const auto& t : types)
    c.model.chains.types.push_back({t.get<std::vector<graph::RelationId>>()});
  const auto expected =
      graph::enumerate_chain_types(c.model.num_relations, c.model.chains.max_length, c.model.chains.mode);
  if (expected.types != c.model.chains.types) {
    throw DataError("checkpoint chain_index does not match the enumeration for |R| = " +
                    std::to_string(c.model.num_relations) + ", K = " + std::to_string(c.model.chains.max_length));
  }

  const bool echo_matches = c.config.node_attr_dim == c.model.node_attr_dim &&
                            c.config.edge_attr_width == c.model.edge_attr_width && c.config.dim == c.model.dim &&
                            c.config.variant == c.model.variant && c.config.edge_attr == c.model.edge_attr &&
                            c.config.max_chain_length == c.model.chains.max_length &&
                            c.config.chain_mode == c.model.chains.mode;
  if (!echo_matches) throw DataError("checkpoint config echo disagrees with its model section");

  const json params = field<json>(j, "params", what);
  if (!params.is_object()) throw DataError("checkpoint params must be an object");
  for (const auto& [name, value] : params.items())
    c.params.emplace(name, tensor_from_json(value, "parameter " + name));
  model::validate_params(c.model, c.params);
  c.embeddings = tensor_from_json(field<json>(j, "embeddings", what), "embeddings");
  if (c.embeddings.shape() != nd::Shape{c.model.num_nodes, c.model.dim}) {
    throw ShapeError("checkpoint embeddings: expected " + nd::shape_str({c.model.num_nodes, c.model.dim}) +
                     ", found " + nd::shape_str(c.embeddings.shape()));
  }
  c.node_fingerprint = field<std::string>(j, "node_fingerprint", what);
  c.dataset = field<std::string>(j, "dataset", what);
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  write_text(path, checkpoint_json(c).dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace trustgnn::report
