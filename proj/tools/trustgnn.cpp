// trustgnn: convert, train, eval, predict, explain, sweep, selfcheck.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "trustgnn/error.hpp"
#include "trustgnn/graph.hpp"
#include "trustgnn/report.hpp"
#include "trustgnn/selfcheck.hpp"
#include "trustgnn/train.hpp"

namespace fs = std::filesystem;
using namespace trustgnn;
using report::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

bool g_quiet = false;

void log(const std::string& line) {
  if (!g_quiet) std::cerr << line << '\n';
}

// Keys beyond TrainConfig accepted in config files and as flags.
const std::vector<std::string> kPathKeys = {"dataset", "output_dir", "checkpoint", "num_relations"};

struct Settings {
  train::TrainConfig train;
  std::string dataset;
  std::string output_dir = ".";
  std::string checkpoint;
  std::size_t num_relations = 4;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

void apply(Settings& s, const std::string& key, const std::string& value, const std::string& where) {
  try {
    if (key == "dataset") {
      s.dataset = value;
    } else if (key == "output_dir") {
      s.output_dir = value;
    } else if (key == "checkpoint") {
      s.checkpoint = value;
    } else if (key == "num_relations") {
      std::size_t n = 0;
      const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
      if (ec != std::errc{} || end != value.data() + value.size() || n == 0)
        throw UsageError("invalid value '" + value + "' for num_relations");
      s.num_relations = n;
    } else if (!train::apply_setting(s.train, key, value)) {
      throw UsageError("unknown configuration key '" + key + "'");
    }
  } catch (const UsageError& e) {
    throw UsageError(where + ": " + e.what());
  }
}

void read_config_file(Settings& s, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    const std::string where = path.string() + ":" + std::to_string(no);
    if (eq == std::string_view::npos) throw UsageError(where + ": expected key=value");
    apply(s, std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))), where);
  }
}

std::string env_name(const std::string& key) {
  std::string out = "TRUSTGNN_";
  for (char c : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// Flag values, filled by CLI11 from the command line or TRUSTGNN_* variables.
struct Overrides {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

void add_setting_flags(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config_path, "Flat key=value configuration file")->envname("TRUSTGNN_CONFIG");
  std::vector<std::string> keys = train::config_keys();
  keys.insert(keys.end(), kPathKeys.begin(), kPathKeys.end());
  for (const auto& key : keys) {
    std::string names = "--" + key;
    std::string dashed = key;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    if (dashed != key) names += ",--" + dashed;
    if (key.size() == 1) names = "-" + key;
    std::string help = "Setting '" + key + "'";
    if (auto def = [&]() -> std::optional<std::string> {
          try {
            return train::get_setting(train::TrainConfig{}, key);
          } catch (const UsageError&) {
            return std::nullopt;
          }
        }()) {
      help += " (default " + *def + ")";
    }
    o.options[key] = app.add_option(names, o.values[key], help)->envname(env_name(key));
  }
}

Settings resolve(const Overrides& o) {
  Settings s;
  if (!o.config_path.empty()) read_config_file(s, o.config_path);
  for (const auto& [key, opt] : o.options) {
    if (opt->count() > 0) apply(s, key, o.values.at(key), "--" + key);
  }
  s.train.validate();
  return s;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError("missing " + what + " (set --" + what + ")");
  if (!fs::is_regular_file(path)) throw DataError(what + " '" + path + "' does not exist");
}

void prepare_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory '" + dir + "'");
}

graph::LoadedGraph load_dataset(const Settings& s) {
  graph::LoadOptions opts;
  opts.num_relations = s.num_relations;
  auto loaded = graph::load_dataset(s.dataset, opts);
  log("loaded " + s.dataset + ": " + std::to_string(loaded.graph.num_nodes()) + " nodes, " +
      std::to_string(loaded.graph.edges().size()) + " edges");
  return loaded;
}

void check_pairing(const report::Checkpoint& ck, const graph::LoadedGraph& data) {
  const auto fp = graph::node_map_fingerprint(data.node_names);
  if (data.graph.num_nodes() != ck.model.num_nodes || fp != ck.node_fingerprint ||
      data.graph.num_relations() != ck.model.num_relations) {
    throw DataError("checkpoint was trained on a different node map (checkpoint " + ck.node_fingerprint + ", " +
                    std::to_string(ck.model.num_nodes) + " nodes; dataset " + fp + ", " +
                    std::to_string(data.graph.num_nodes()) + " nodes)");
  }
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_convert(const std::string& input, const std::string& output, bool strict, std::size_t num_relations) {
  if (!fs::is_regular_file(input)) throw DataError("input '" + input + "' does not exist");
  graph::LoadOptions opts;
  opts.num_relations = num_relations;
  opts.lenient = !strict;
  opts.drop_self_loops = !strict;
  opts.keep_last_on_conflict = !strict;
  const auto loaded = graph::load_dataset(input, opts);
  if (loaded.dropped_self_loops) log("dropped " + std::to_string(loaded.dropped_self_loops) + " self-loops");
  if (loaded.overridden_conflicts)
    log("kept the last level for " + std::to_string(loaded.overridden_conflicts) + " re-rated pairs");
  const fs::path out(output);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  graph::save_graph(loaded.graph, out);
  graph::save_node_map(loaded.node_names, graph::node_map_path(out));
  log("wrote " + out.string() + " (" + std::to_string(loaded.graph.num_nodes()) + " nodes, " +
      std::to_string(loaded.graph.edges().size()) + " edges) and " + graph::node_map_path(out).string());
  return kOk;
}

int cmd_train(const Settings& s) {
  require_file(s.dataset, "dataset");
  prepare_output_dir(s.output_dir);
  const auto data = load_dataset(s);
  const auto& cfg = s.train;
  log("training " + model::to_string(cfg.variant) + ", " + std::to_string(cfg.repeats) + " run(s) from seed " +
      std::to_string(cfg.seed));
  const auto rep = train::repeat_runs(
      data.graph, cfg, cfg.repeats,
      [](const train::RunOutcome& r) {
        if (r.metrics) {
          log("seed " + std::to_string(r.seed) + ": micro-F1 " + fmt(r.metrics->micro_f1) + ", MAE " +
              fmt(r.metrics->mae) + ", best epoch " + std::to_string(r.metrics->best_epoch) + "/" +
              std::to_string(r.metrics->epochs_run));
        } else {
          log("seed " + std::to_string(r.seed) + " failed: " + r.error);
        }
      },
      true);

  const fs::path metrics_path = fs::path(s.output_dir) / (report::file_stem("metrics", cfg) + ".json");
  report::write_text(metrics_path, report::dump(report::repeat_json(rep)));
  log("wrote " + metrics_path.string());
  if (rep.micro_f1) {
    log("micro-F1 " + train::format_pm(*rep.micro_f1, true) + ", MAE " + train::format_pm(*rep.mae, false) +
        " (mean ± sample std over " + std::to_string(rep.runs.size() - rep.failures) + " runs)");
  }

  if (rep.first) {
    report::Checkpoint ck;
    ck.config = cfg;
    ck.model = rep.first->model.model;
    ck.params = rep.first->model.params;
    ck.embeddings = rep.first->model.embeddings;
    ck.node_fingerprint = graph::node_map_fingerprint(data.node_names);
    ck.dataset = s.dataset;
    const fs::path ck_path = s.checkpoint.empty()
                                 ? fs::path(s.output_dir) / (report::file_stem("checkpoint", cfg) + ".json")
                                 : fs::path(s.checkpoint);
    report::save_checkpoint(ck, ck_path);
    log("wrote " + ck_path.string());
  }
  if (rep.failures == 0) return kOk;
  // Partial report written above; the exit code reflects the first failure.
  for (const auto& r : rep.runs) {
    if (!r.metrics) {
      std::cerr << "error: " << rep.failures << " of " << rep.runs.size() << " runs failed; first: " << r.error
                << '\n';
      return r.error.find("diverged") != std::string::npos ? kNumeric : kData;
    }
  }
  return kOk;
}

report::Checkpoint load_checkpoint_for(const Settings& s) {
  require_file(s.checkpoint, "checkpoint");
  auto ck = report::load_checkpoint(s.checkpoint);
  log("loaded checkpoint " + s.checkpoint + " (" + model::to_string(ck.model.variant) + ", seed " +
      std::to_string(ck.config.seed) + ")");
  return ck;
}

// The dataset recorded at training time, unless one was given.
Settings with_checkpoint_dataset(Settings s, const report::Checkpoint& ck) {
  if (s.dataset.empty()) s.dataset = ck.dataset;
  s.num_relations = ck.model.num_relations;
  return s;
}

int cmd_eval(Settings s) {
  const auto ck = load_checkpoint_for(s);
  s = with_checkpoint_dataset(s, ck);
  require_file(s.dataset, "dataset");
  prepare_output_dir(s.output_dir);
  const auto data = load_dataset(s);
  check_pairing(ck, data);
  const auto split = train::make_split(data.graph, ck.config);
  const auto message_graph = data.graph.with_edges(split.fit);
  const auto m = train::evaluate(ck.model, ck.params, message_graph, split.test);
  const fs::path path = fs::path(s.output_dir) / (report::file_stem("eval", ck.config) + ".json");
  report::write_text(path, report::dump({{"config", report::config_json(ck.config)},
                                         {"checkpoint", s.checkpoint},
                                         {"test_edges", split.test.size()},
                                         {"metrics", report::metrics_json(m)}}));
  log("micro-F1 " + fmt(m.micro_f1) + ", MAE " + fmt(m.mae) + " on " + std::to_string(split.test.size()) +
      " test edges");
  log("wrote " + path.string());
  return kOk;
}

std::vector<std::string> resolve_node_names(const Settings& s, const report::Checkpoint& ck,
                                            const std::string& node_map) {
  std::vector<std::string> names;
  if (!node_map.empty()) {
    names = graph::load_node_map(node_map);
  } else {
    if (s.dataset.empty()) throw UsageError("predict needs --node-map or a dataset to resolve node ids");
    require_file(s.dataset, "dataset");
    names = load_dataset(s).node_names;
  }
  const auto fp = graph::node_map_fingerprint(names);
  if (names.size() != ck.model.num_nodes || fp != ck.node_fingerprint) {
    throw DataError("node map (" + std::to_string(names.size()) + " nodes, " + fp +
                    ") does not belong to this checkpoint (" + std::to_string(ck.model.num_nodes) + " nodes, " +
                    ck.node_fingerprint + ")");
  }
  return names;
}

int cmd_predict(Settings s, const std::string& pairs_path, const std::string& out_path,
                const std::string& node_map) {
  const auto ck = load_checkpoint_for(s);
  s = with_checkpoint_dataset(s, ck);
  if (!fs::is_regular_file(pairs_path)) throw DataError("pairs file '" + pairs_path + "' does not exist");
  const auto names = resolve_node_names(s, ck, node_map);
  std::unordered_map<std::string, graph::NodeId> ids;
  for (std::size_t i = 0; i < names.size(); ++i) ids.emplace(names[i], static_cast<graph::NodeId>(i));

  const std::size_t r = ck.model.num_relations;
  std::string out = "src\tdst\tpredicted_level";
  for (std::size_t k = 0; k < r; ++k) out += "\tp" + std::to_string(k);
  out += '\n';

  std::ifstream in(pairs_path);
  std::string line;
  std::size_t no = 0, rows = 0, errors = 0;
  auto error_row = [&](std::string_view a, std::string_view b, const std::string& why) {
    out += std::string(a) + '\t' + std::string(b) + "\terror";
    for (std::size_t k = 0; k < r; ++k) out += "\tNA";
    out += '\n';
    ++errors;
    log(pairs_path + ":" + std::to_string(no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string_view> f;
    std::size_t pos = 0;
    while (true) {
      const auto tab = t.find('\t', pos);
      f.push_back(trim(t.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos)));
      if (tab == std::string_view::npos) break;
      pos = tab + 1;
    }
    ++rows;
    if (f.size() != 2) {
      error_row(f[0], f.size() > 1 ? f[1] : "", "expected src<TAB>dst");
      continue;
    }
    const auto u = ids.find(std::string(f[0]));
    const auto v = ids.find(std::string(f[1]));
    if (u == ids.end() || v == ids.end()) {
      error_row(f[0], f[1], "unknown node id '" + std::string(u == ids.end() ? f[0] : f[1]) + "'");
      continue;
    }
    if (u->second == v->second) {
      error_row(f[0], f[1], "trustor and trustee are the same node");
      continue;
    }
    const auto p = model::predict_pair(ck.embeddings, u->second, v->second, ck.params);
    const auto best = std::max_element(p.begin(), p.end()) - p.begin();
    out += std::string(f[0]) + '\t' + std::string(f[1]) + '\t' + std::to_string(best);
    for (double x : p) out += '\t' + json(x).dump();
    out += '\n';
  }
  const fs::path path =
      out_path.empty() ? fs::path(s.output_dir) / (report::file_stem("predictions", ck.config) + ".tsv") : fs::path(out_path);
  report::write_text(path, out);
  log("predicted " + std::to_string(rows - errors) + " pairs (" + std::to_string(errors) + " errors); wrote " +
      path.string());
  return kOk;
}

int cmd_explain(Settings s, std::size_t top_k) {
  const auto ck = load_checkpoint_for(s);
  s = with_checkpoint_dataset(s, ck);
  require_file(s.dataset, "dataset");
  prepare_output_dir(s.output_dir);
  const auto data = load_dataset(s);
  check_pairing(ck, data);
  const auto split = train::make_split(data.graph, ck.config);
  const auto ex = train::explain(ck.model, ck.params, data.graph.with_edges(split.fit), top_k);
  if (ex.warning) log("warning: " + *ex.warning);
  const auto stem = fs::path(s.output_dir) / report::file_stem("explain", ck.config);
  report::write_text(stem.string() + ".json", report::dump(report::explanation_json(ex)));
  report::write_text(stem.string() + ".csv", report::explanation_csv(ex));
  for (std::size_t i = 0; i < ex.top_k; ++i) {
    const auto& row = ex.ranked[i];
    log(std::to_string(i + 1) + ". " + row.label + "  alpha " + (row.alpha ? fmt(*row.alpha) : "-") +
        "  alpha_bar " + (row.alpha_bar ? fmt(*row.alpha_bar) : "-"));
  }
  log("wrote " + stem.string() + ".json and .csv");
  return kOk;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = trim(item);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || end != t.data() + t.size())
      throw UsageError("invalid sweep value '" + std::string(t) + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--values needs at least one value");
  return out;
}

int cmd_sweep(const Settings& s, const std::string& axis_name, const std::string& values_text) {
  const auto axis = train::parse_sweep_axis(axis_name);
  const auto values = parse_values(values_text);
  for (double v : values) train::with_axis_value(s.train, axis, v);  // validate every cell up front
  require_file(s.dataset, "dataset");
  prepare_output_dir(s.output_dir);
  const auto data = load_dataset(s);
  const auto cells = train::sweep(data.graph, s.train, axis, values, [](const train::RunOutcome& r) {
    log("  seed " + std::to_string(r.seed) + (r.metrics ? ": micro-F1 " + fmt(r.metrics->micro_f1) : ": " + r.error));
  });
  const fs::path path =
      fs::path(s.output_dir) / (report::file_stem("sweep_" + train::to_string(axis), s.train) + ".json");
  report::write_text(path, report::dump(report::sweep_json(s.train, axis, cells)));
  bool any_error = false;
  for (const auto& c : cells) {
    if (c.report && c.report->micro_f1) {
      log(train::to_string(axis) + "=" + json(c.value).dump() + ": micro-F1 " +
          train::format_pm(*c.report->micro_f1, true) + ", MAE " + train::format_pm(*c.report->mae, false));
    } else {
      any_error = true;
      log(train::to_string(axis) + "=" + json(c.value).dump() + ": failed" +
          (c.error.empty() ? std::string() : ": " + c.error));
    }
  }
  log("wrote " + path.string());
  return any_error ? kData : kOk;
}

int cmd_selfcheck(const std::string& json_path, std::uint64_t seed) {
  selfcheck::Options o;
  o.seed = seed;
  const auto results = selfcheck::run(o);
  std::cerr << selfcheck::format(results);
  if (!json_path.empty()) {
    json rows = json::array();
    for (const auto& r : results)
      rows.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}});
    report::write_text(json_path, report::dump({{"properties", rows}}));
  }
  const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  return ok ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TrustGNN trust-relationship prediction on directed, leveled trust graphs"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("-q,--quiet", g_quiet, "Suppress progress output");

  Overrides o;
  add_setting_flags(app, o);

  auto* convert = app.add_subcommand("convert", "Raw edge list to canonical TSV plus node-map sidecar");
  std::string in_path, out_path;
  bool strict = false;
  convert->add_option("input", in_path, "Raw or canonical edge list")->required();
  convert->add_option("output", out_path, "Canonical TSV to write")->required();
  convert->add_flag("--strict", strict, "Reject self-loops, re-ratings and non-tab separators");

  auto* train_cmd = app.add_subcommand("train", "Train, evaluate on the held-out split, write checkpoint and metrics");
  auto* eval_cmd = app.add_subcommand("eval", "Re-evaluate a checkpoint on its test split");
  auto* predict = app.add_subcommand("predict", "Class distribution for src<TAB>dst pairs");
  std::string pairs, pred_out, node_map;
  predict->add_option("--pairs", pairs, "Pairs file with original node ids")->required();
  predict->add_option("--out", pred_out, "Output TSV (default <output_dir>/predictions_<variant>_seed<seed>.tsv)");
  predict->add_option("--node-map,--node_map", node_map, "Node-map sidecar (default: from the dataset)");
  auto* explain = app.add_subcommand("explain", "Rank chain types by attention weight");
  std::size_t top_k = 5;
  explain->add_option("--top-k,--top_k", top_k, "Rows in the CSV report")->capture_default_str();
  auto* sweep = app.add_subcommand("sweep", "Repeated runs over one configuration axis");
  std::string axis, values;
  sweep->add_option("--axis", axis, "K, node_dim, edge_dim or train_ratio")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  auto* check = app.add_subcommand("selfcheck", "Run the property suite");
  std::string check_json;
  std::uint64_t check_seed = 2024;
  check->add_option("--json", check_json, "Also write the results as JSON");
  check->add_option("--check-seed", check_seed, "Seed for generated instances")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*convert) {
      const Settings s = resolve(o);
      return cmd_convert(in_path, out_path, strict, s.num_relations);
    }
    if (*check) return cmd_selfcheck(check_json, check_seed);
    const Settings s = resolve(o);
    if (*train_cmd) return cmd_train(s);
    if (*eval_cmd) return cmd_eval(s);
    if (*predict) return cmd_predict(s, pairs, pred_out, node_map);
    if (*explain) return cmd_explain(s, top_k);
    if (*sweep) return cmd_sweep(s, axis, values);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
