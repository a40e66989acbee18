#include "trustgnn/synthetic.hpp"

#include <map>
#include <random>
#include <set>

#include "trustgnn/error.hpp"

namespace trustgnn::synthetic {

using graph::Edge;
using graph::NodeId;
using graph::RelationId;
using graph::TrustGraph;

TrustGraph asymmetric_toy_graph() {
  return TrustGraph(6, 4,
                    {{0, 1, 3}, {1, 0, 0}, {2, 3, 2}, {3, 2, 1}, {4, 5, 3}, {5, 4, 1}, {0, 2, 2}, {3, 4, 0}});
}

std::vector<std::pair<Edge, Edge>> asymmetric_pairs(const TrustGraph& g) {
  std::map<std::pair<NodeId, NodeId>, RelationId> level;
  for (const Edge& e : g.edges()) level[{e.src, e.dst}] = e.rel;
  std::vector<std::pair<Edge, Edge>> out;
  for (const Edge& e : g.edges()) {
    if (e.src > e.dst) continue;
    auto it = level.find({e.dst, e.src});
    if (it != level.end() && it->second != e.rel) out.push_back({e, Edge{e.dst, e.src, it->second}});
  }
  return out;
}

namespace {

std::vector<std::pair<NodeId, NodeId>> random_pairs(std::size_t nodes, std::size_t edges, std::mt19937_64& rng) {
  if (nodes < 2 || edges > nodes * (nodes - 1)) {
    throw UsageError("cannot place " + std::to_string(edges) + " edges on " + std::to_string(nodes) + " nodes");
  }
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(nodes - 1));
  std::set<std::pair<NodeId, NodeId>> seen;
  std::vector<std::pair<NodeId, NodeId>> out;
  while (out.size() < edges) {
    const NodeId s = pick(rng);
    const NodeId d = pick(rng);
    if (s == d || !seen.insert({s, d}).second) continue;
    out.push_back({s, d});
  }
  return out;
}

}  // namespace

TrustGraph planted_skill_graph(std::size_t nodes, std::size_t edges, std::size_t relations, double noise,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<RelationId> level(0, static_cast<RelationId>(relations - 1));
  std::vector<RelationId> skill(nodes);
  for (auto& s : skill) s = level(rng);
  std::bernoulli_distribution flip(noise);
  std::vector<Edge> out;
  for (auto [s, d] : random_pairs(nodes, edges, rng)) out.push_back({s, d, flip(rng) ? level(rng) : skill[d]});
  return TrustGraph(nodes, relations, std::move(out));
}

TrustGraph random_graph(std::size_t nodes, std::size_t edges, std::size_t relations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<RelationId> level(0, static_cast<RelationId>(relations - 1));
  std::vector<Edge> out;
  for (auto [s, d] : random_pairs(nodes, edges, rng)) out.push_back({s, d, level(rng)});
  return TrustGraph(nodes, relations, std::move(out));
}

}  // namespace trustgnn::synthetic
