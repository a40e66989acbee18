#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "trustgnn/graph.hpp"

namespace trustgnn::synthetic {

// Six nodes in three reciprocal pairs whose two directions carry different levels,
// plus two one-way edges. Four relations.
graph::TrustGraph asymmetric_toy_graph();

// Reciprocal pairs (u, v), (v, u) present in `g` with different levels.
std::vector<std::pair<graph::Edge, graph::Edge>> asymmetric_pairs(const graph::TrustGraph& g);

// Every node gets a hidden skill in [0, relations); an edge u -> v carries the
// skill of v, replaced by a uniform level with probability `noise`.
graph::TrustGraph planted_skill_graph(std::size_t nodes, std::size_t edges, std::size_t relations, double noise,
                                      std::uint64_t seed);

// Simple directed graph (no self-loops, no parallel edges) with uniform levels.
graph::TrustGraph random_graph(std::size_t nodes, std::size_t edges, std::size_t relations, std::uint64_t seed);

}  // namespace trustgnn::synthetic
