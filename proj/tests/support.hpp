#pragma once

#include <cstdint>
#include <random>
#include <set>

#include "trustgnn/graph.hpp"
#include "trustgnn/tensor.hpp"

namespace trustgnn::testing {

inline nd::Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  nd::Tensor t(rows, cols);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

// Random simple directed graph without self-loops.
inline graph::TrustGraph random_graph(std::size_t nodes, std::size_t edges, std::size_t relations,
                                      std::mt19937_64& rng) {
  std::uniform_int_distribution<graph::NodeId> node(0, static_cast<graph::NodeId>(nodes - 1));
  std::uniform_int_distribution<graph::RelationId> rel(0, static_cast<graph::RelationId>(relations - 1));
  std::set<std::pair<graph::NodeId, graph::NodeId>> used;
  std::vector<graph::Edge> out;
  const std::size_t cap = nodes * (nodes - 1);
  while (out.size() < edges && used.size() < cap) {
    const auto s = node(rng), d = node(rng);
    if (s == d || !used.emplace(s, d).second) continue;
    out.push_back({s, d, rel(rng)});
  }
  return graph::TrustGraph(nodes, relations, std::move(out));
}

}  // namespace trustgnn::testing
