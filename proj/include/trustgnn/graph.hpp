#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trustgnn/sparse.hpp"
#include "trustgnn/tensor.hpp"

namespace trustgnn::graph {

using NodeId = std::uint32_t;
using RelationId = std::uint32_t;

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  RelationId rel = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Trust levels in ascending strength; the position is the relation id.
inline constexpr std::string_view kLevelNames[] = {"observer", "apprentice", "journeyer", "master"};

// Accepts an integer id in [0, num_relations) or a level name (case-insensitive).
std::optional<RelationId> parse_level(std::string_view token, std::size_t num_relations);

// Directed multi-relational trust graph. Immutable after construction.
// A_t[i, j] = 1 iff edge i -> j of type t exists.
class TrustGraph {
 public:
  TrustGraph() = default;
  // Validates ids, rejects self-loops and (src, dst) pairs carrying two
  // different relations, and drops exact duplicates.
  TrustGraph(std::size_t num_nodes, std::size_t num_relations, std::vector<Edge> edges);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_relations() const noexcept { return num_relations_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  // Row = source, entries = targets.
  const nd::CsrMatrix& out_adjacency(RelationId rel) const { return out_.at(rel); }
  // Row = target, entries = sources (A_tᵀ).
  const nd::CsrMatrix& in_adjacency(RelationId rel) const { return in_.at(rel); }

  // Same node and relation sets with a subset of edges.
  TrustGraph with_edges(std::vector<Edge> edges) const;
  // Every edge flipped.
  TrustGraph reversed() const;

 private:
  std::size_t num_nodes_ = 0;
  std::size_t num_relations_ = 0;
  std::vector<Edge> edges_;
  std::vector<nd::CsrMatrix> out_;
  std::vector<nd::CsrMatrix> in_;
};

struct LoadedGraph {
  TrustGraph graph;
  std::vector<std::string> node_names;  // dense id -> original id
  std::size_t dropped_self_loops = 0;
  std::size_t overridden_conflicts = 0;
};

struct LoadOptions {
  std::size_t num_relations = 4;
  // Accept any whitespace as a separator and trustlet-style `a -> b [level="x"]` lines.
  bool lenient = false;
  // Raw dumps contain self-certifications and re-certifications; these let a
  // conversion drop the former and keep the latest level for the latter.
  bool drop_self_loops = false;
  bool keep_last_on_conflict = false;
  // Node tokens are dense ids in [0, n) and are used as-is instead of being compacted.
  std::optional<std::size_t> dense_nodes;
};

LoadedGraph load_graph(const std::filesystem::path& path, const LoadOptions& options = {});
LoadedGraph parse_graph(std::string_view text, const LoadOptions& options = {}, const std::string& source = "<text>");

// A .tsv file with a node-map sidecar keeps its dense ids and takes names from
// the sidecar; anything else goes through load_graph.
LoadedGraph load_dataset(const std::filesystem::path& path, LoadOptions options = {});

// Canonical form: `src<TAB>dst<TAB>level` with dense ids and numeric levels.
std::string format_graph(const TrustGraph& g);
void save_graph(const TrustGraph& g, const std::filesystem::path& path);
std::filesystem::path node_map_path(const std::filesystem::path& graph_path);
void save_node_map(const std::vector<std::string>& names, const std::filesystem::path& path);
std::vector<std::string> load_node_map(const std::filesystem::path& path);

// Stable 64-bit FNV-1a over the node names, used to pair checkpoints with datasets.
std::string node_map_fingerprint(const std::vector<std::string>& names);

struct ChainType {
  std::vector<RelationId> rels;

  std::size_t length() const noexcept { return rels.size(); }
  // 1-based levels joined by arrows, e.g. "4→4".
  std::string label() const;

  friend auto operator<=>(const ChainType&, const ChainType&) = default;
};

enum class ChainMode { upto_k, exact_k };

std::string to_string(ChainMode mode);
ChainMode parse_chain_mode(std::string_view s);

struct ChainIndex {
  std::size_t max_length = 0;
  ChainMode mode = ChainMode::upto_k;
  std::vector<ChainType> types;

  std::size_t size() const noexcept { return types.size(); }
};

// Lexicographic over relation ids, shorter chains first.
ChainIndex enumerate_chain_types(std::size_t num_relations, std::size_t max_length, ChainMode mode);

enum class Direction { trustee, trustor };

// trustee: M[v] = Σ over walks u -> ... -> v typed `chain` of H[u]
// trustor: M[v] = Σ over walks v -> ... -> u typed `chain` of H[u]
nd::Tensor chain_reach_sum(const TrustGraph& g, const ChainType& chain, Direction dir, const nd::Tensor& h);

using Path = std::vector<NodeId>;

// Exhaustive walk enumeration, the oracle for chain_reach_sum. Paths are
// returned in edge order (source first). Throws OracleOverflow past `limit`.
std::vector<Path> brute_force_chain_paths(const TrustGraph& g, const ChainType& chain, Direction dir, NodeId v,
                                          std::size_t limit = 1'000'000);

struct EdgeSplit {
  std::vector<Edge> train;
  std::vector<Edge> test;
  std::uint64_t seed = 0;
};

// Uniform random partition with round(ratio * |E|) training edges.
EdgeSplit split_edges(const std::vector<Edge>& edges, double train_ratio, std::uint64_t seed);
inline EdgeSplit split_edges(const TrustGraph& g, double train_ratio, std::uint64_t seed) {
  return split_edges(g.edges(), train_ratio, seed);
}

}  // namespace trustgnn::graph
