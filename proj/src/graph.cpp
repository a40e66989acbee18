#include "trustgnn/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>
#include <unordered_map>

#include "trustgnn/error.hpp"

namespace trustgnn::graph {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_on(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<nd::CsrMatrix> build_adjacency(std::size_t n, std::size_t num_rel, const std::vector<Edge>& edges,
                                           bool transpose) {
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> per_rel(num_rel);
  for (const Edge& e : edges) {
    per_rel[e.rel].emplace_back(transpose ? e.dst : e.src, transpose ? e.src : e.dst);
  }
  std::vector<nd::CsrMatrix> out;
  out.reserve(num_rel);
  for (auto& entries : per_rel) out.push_back(nd::CsrMatrix::from_entries(n, n, std::move(entries)));
  return out;
}

std::uint64_t pair_key(NodeId a, NodeId b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

}  // namespace

std::optional<RelationId> parse_level(std::string_view token, std::size_t num_relations) {
  token = trim(token);
  if (token.empty()) return std::nullopt;
  RelationId id = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), id);
  if (ec == std::errc() && ptr == token.data() + token.size()) {
    if (id < num_relations) return id;
    return std::nullopt;
  }
  std::string lower(token);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (std::size_t i = 0; i < std::size(kLevelNames) && i < num_relations; ++i) {
    if (lower == kLevelNames[i]) return static_cast<RelationId>(i);
  }
  return std::nullopt;
}

TrustGraph::TrustGraph(std::size_t num_nodes, std::size_t num_relations, std::vector<Edge> edges)
    : num_nodes_(num_nodes), num_relations_(num_relations) {
  if (num_relations == 0) throw DataError("trust graph needs at least one relation type");
  std::unordered_map<std::uint64_t, RelationId> seen;
  seen.reserve(edges.size());
  edges_.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.src >= num_nodes || e.dst >= num_nodes) {
      throw DataError("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) + " references a node >= " +
                      std::to_string(num_nodes));
    }
    if (e.rel >= num_relations) {
      throw DataError("edge relation " + std::to_string(e.rel) + " >= " + std::to_string(num_relations));
    }
    if (e.src == e.dst) throw DataError("self-loop on node " + std::to_string(e.src));
    auto [it, inserted] = seen.emplace(pair_key(e.src, e.dst), e.rel);
    if (!inserted) {
      if (it->second != e.rel) {
        throw DataError("conflicting relations " + std::to_string(it->second) + " and " + std::to_string(e.rel) +
                        " for edge " + std::to_string(e.src) + "->" + std::to_string(e.dst));
      }
      continue;
    }
    edges_.push_back(e);
  }
  out_ = build_adjacency(num_nodes_, num_relations_, edges_, false);
  in_ = build_adjacency(num_nodes_, num_relations_, edges_, true);
}

TrustGraph TrustGraph::with_edges(std::vector<Edge> edges) const {
  return TrustGraph(num_nodes_, num_relations_, std::move(edges));
}

TrustGraph TrustGraph::reversed() const {
  std::vector<Edge> flipped;
  flipped.reserve(edges_.size());
  for (const Edge& e : edges_) flipped.push_back({e.dst, e.src, e.rel});
  return TrustGraph(num_nodes_, num_relations_, std::move(flipped));
}

LoadedGraph parse_graph(std::string_view text, const LoadOptions& options, const std::string& source) {
  static const std::regex dot_edge(R"re(^\s*"?([^"\s]+)"?\s*->\s*"?([^"\s\[]+)"?\s*\[\s*level\s*=\s*"?(\w+)"?\s*\]\s*;?\s*$)re");

  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::string> names;
  std::vector<Edge> edges;
  struct Seen {
    RelationId rel;
    std::size_t line;
    std::size_t index;
  };
  std::unordered_map<std::uint64_t, Seen> seen;
  std::size_t line_no = 0;

  auto intern = [&](std::string_view name) -> NodeId {
    if (options.dense_nodes) {
      NodeId id = 0;
      const auto [end, ec] = std::from_chars(name.data(), name.data() + name.size(), id);
      if (ec != std::errc{} || end != name.data() + name.size() || id >= *options.dense_nodes) {
        throw ParseError(source, line_no,
                         "node id '" + std::string(name) + "' is not in [0, " + std::to_string(*options.dense_nodes) +
                             ")");
      }
      return id;
    }
    auto [it, inserted] = ids.try_emplace(std::string(name), static_cast<NodeId>(names.size()));
    if (inserted) names.emplace_back(name);
    return it->second;
  };

  std::size_t dropped_self_loops = 0;
  std::size_t overridden = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string_view stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    if (options.lenient && (stripped.front() == '%' || stripped.starts_with("digraph") || stripped == "}" ||
                            stripped == "{")) {
      continue;
    }

    std::string_view src, dst, level;
    std::cmatch m;
    if (options.lenient && std::regex_match(stripped.begin(), stripped.end(), m, dot_edge)) {
      src = std::string_view(m[1].first, m[1].length());
      dst = std::string_view(m[2].first, m[2].length());
      level = std::string_view(m[3].first, m[3].length());
    } else {
      const auto fields = options.lenient ? split_ws(stripped) : split_on(line, '\t');
      if (fields.size() != 3) {
        throw ParseError(source, line_no,
                         "expected 3 " + std::string(options.lenient ? "whitespace" : "tab") +
                             "-separated fields (src, dst, level), got " + std::to_string(fields.size()));
      }
      src = trim(fields[0]);
      dst = trim(fields[1]);
      level = trim(fields[2]);
    }
    if (src.empty() || dst.empty()) throw ParseError(source, line_no, "empty node id");
    const auto rel = parse_level(level, options.num_relations);
    if (!rel) {
      throw ParseError(source, line_no,
                       "invalid trust level '" + std::string(level) + "' (expected an id in [0, " +
                           std::to_string(options.num_relations) + ") or a level name)");
    }
    if (src == dst) {
      if (options.drop_self_loops) {
        ++dropped_self_loops;
        continue;
      }
      throw ParseError(source, line_no, "self-loop on node '" + std::string(src) + "'");
    }

    const NodeId s = intern(src);
    const NodeId d = intern(dst);
    auto [it, inserted] = seen.try_emplace(pair_key(s, d), Seen{*rel, line_no, edges.size()});
    if (!inserted) {
      if (it->second.rel != *rel && options.keep_last_on_conflict) {
        edges[it->second.index].rel = *rel;
        it->second.rel = *rel;
        it->second.line = line_no;
        ++overridden;
        continue;
      }
      if (it->second.rel != *rel) {
        throw ParseError(source, line_no,
                         "edge '" + std::string(src) + "' -> '" + std::string(dst) + "' already has level " +
                             std::to_string(it->second.rel) + " (line " + std::to_string(it->second.line) + ")");
      }
      continue;
    }
    edges.push_back({s, d, *rel});
  }
  if (options.dense_nodes) {
    names.clear();
    for (std::size_t i = 0; i < *options.dense_nodes; ++i) names.push_back(std::to_string(i));
  }
  return LoadedGraph{TrustGraph(names.size(), options.num_relations, std::move(edges)), std::move(names),
                     dropped_self_loops, overridden};
}

LoadedGraph load_graph(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open graph file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_graph(buf.str(), options, path.string());
}

LoadedGraph load_dataset(const std::filesystem::path& path, LoadOptions options) {
  const auto sidecar = node_map_path(path);
  if (path.extension() != ".tsv" || !std::filesystem::exists(sidecar)) return load_graph(path, options);
  auto names = load_node_map(sidecar);
  options.dense_nodes = names.size();
  LoadedGraph loaded = load_graph(path, options);
  loaded.node_names = std::move(names);
  return loaded;
}

std::string format_graph(const TrustGraph& g) {
  std::string out;
  out.reserve(g.edges().size() * 16);
  for (const Edge& e : g.edges()) {
    out += std::to_string(e.src);
    out += '\t';
    out += std::to_string(e.dst);
    out += '\t';
    out += std::to_string(e.rel);
    out += '\n';
  }
  return out;
}

void save_graph(const TrustGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write graph file " + path.string());
  out << format_graph(g);
}

std::filesystem::path node_map_path(const std::filesystem::path& graph_path) {
  std::filesystem::path p = graph_path;
  p.replace_extension(".nodes.tsv");
  return p;
}

void save_node_map(const std::vector<std::string>& names, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write node map " + path.string());
  for (std::size_t i = 0; i < names.size(); ++i) out << i << '\t' << names[i] << '\n';
}

std::vector<std::string> load_node_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open node map " + path.string());
  std::vector<std::string> names;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_on(line, '\t');
    std::size_t id = 0;
    const std::string_view f0 = fields[0];
    auto [ptr, ec] = std::from_chars(f0.data(), f0.data() + f0.size(), id);
    if (fields.size() != 2 || ec != std::errc() || ptr != f0.data() + f0.size()) {
      throw ParseError(path.string(), line_no, "expected `dense_id<TAB>original_id`");
    }
    if (id != names.size()) throw ParseError(path.string(), line_no, "dense ids must be consecutive from 0");
    names.emplace_back(fields[1]);
  }
  return names;
}

std::string node_map_fingerprint(const std::vector<std::string>& names) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const std::string& n : names) {
    for (unsigned char c : n) mix(c);
    mix('\n');
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ChainType::label() const {
  std::string out;
  for (std::size_t i = 0; i < rels.size(); ++i) {
    if (i) out += "→";
    out += std::to_string(rels[i] + 1);
  }
  return out;
}

std::string to_string(ChainMode mode) { return mode == ChainMode::upto_k ? "upto-K" : "exact-K"; }

ChainMode parse_chain_mode(std::string_view s) {
  if (s == "upto-K" || s == "upto-k" || s == "upto") return ChainMode::upto_k;
  if (s == "exact-K" || s == "exact-k" || s == "exact") return ChainMode::exact_k;
  throw UsageError("unknown chain mode '" + std::string(s) + "' (expected upto-K or exact-K)");
}

ChainIndex enumerate_chain_types(std::size_t num_relations, std::size_t max_length, ChainMode mode) {
  if (num_relations == 0) throw UsageError("chain enumeration needs at least one relation");
  if (max_length == 0) throw UsageError("maximum chain length K must be >= 1");
  ChainIndex index{max_length, mode, {}};
  const std::size_t first = mode == ChainMode::upto_k ? 1 : max_length;
  for (std::size_t k = first; k <= max_length; ++k) {
    std::size_t count = 1;
    for (std::size_t i = 0; i < k; ++i) count *= num_relations;
    for (std::size_t code = 0; code < count; ++code) {
      ChainType chain{std::vector<RelationId>(k)};
      std::size_t rest = code;
      for (std::size_t pos = k; pos-- > 0;) {
        chain.rels[pos] = static_cast<RelationId>(rest % num_relations);
        rest /= num_relations;
      }
      index.types.push_back(std::move(chain));
    }
  }
  return index;
}

nd::Tensor chain_reach_sum(const TrustGraph& g, const ChainType& chain, Direction dir, const nd::Tensor& h) {
  if (h.rows() != g.num_nodes()) {
    throw ShapeError("chain_reach_sum: representation has " + std::to_string(h.rows()) + " rows for " +
                     std::to_string(g.num_nodes()) + " nodes");
  }
  nd::Tensor m = h;
  if (dir == Direction::trustee) {
    for (RelationId t : chain.rels) m = g.in_adjacency(t).multiply(m);
  } else {
    for (auto it = chain.rels.rbegin(); it != chain.rels.rend(); ++it) m = g.out_adjacency(*it).multiply(m);
  }
  return m;
}

std::vector<Path> brute_force_chain_paths(const TrustGraph& g, const ChainType& chain, Direction dir, NodeId v,
                                          std::size_t limit) {
  if (v >= g.num_nodes()) throw DataError("brute_force_chain_paths: node out of range");
  std::vector<Path> out;
  const std::size_t k = chain.length();
  Path stack{v};
  std::size_t visited = 0;

  // Trustee walks are grown backwards from v and reversed on completion.
  std::function<void()> dfs = [&]() {
    if (++visited > limit) throw OracleOverflow("brute-force path enumeration exceeded " + std::to_string(limit));
    const std::size_t depth = stack.size() - 1;
    if (depth == k) {
      if (out.size() >= limit) throw OracleOverflow("brute-force path enumeration exceeded " + std::to_string(limit));
      Path p = stack;
      if (dir == Direction::trustee) std::reverse(p.begin(), p.end());
      out.push_back(std::move(p));
      return;
    }
    const RelationId t = dir == Direction::trustee ? chain.rels[k - 1 - depth] : chain.rels[depth];
    const nd::CsrMatrix& adj = dir == Direction::trustee ? g.in_adjacency(t) : g.out_adjacency(t);
    const NodeId cur = stack.back();
    for (std::size_t e = adj.row_ptr()[cur]; e < adj.row_ptr()[cur + 1]; ++e) {
      stack.push_back(adj.col_idx()[e]);
      dfs();
      stack.pop_back();
    }
  };
  dfs();
  return out;
}

EdgeSplit split_edges(const std::vector<Edge>& edges, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw UsageError("train ratio must lie in (0, 1), got " + std::to_string(train_ratio));
  }
  const std::size_t n = edges.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) {
    throw DataError("train ratio " + std::to_string(train_ratio) + " leaves an empty split for " + std::to_string(n) +
                    " edges");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  EdgeSplit split;
  split.seed = seed;
  split.train.reserve(n_train);
  split.test.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) (i < n_train ? split.train : split.test).push_back(edges[order[i]]);
  return split;
}

}  // namespace trustgnn::graph
