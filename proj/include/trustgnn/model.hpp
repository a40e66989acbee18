#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trustgnn/graph.hpp"
#include "trustgnn/ops.hpp"
#include "trustgnn/optim.hpp"

namespace trustgnn::model {

using graph::ChainIndex;
using graph::ChainType;
using graph::Direction;
using graph::Edge;
using graph::TrustGraph;
using nd::ParamStore;
using nd::Tape;
using nd::Tensor;
using nd::Var;
using nd::VarMap;

// full: both roles with attention.
// trustee_only (TrustGNN-1), trustor_only (TrustGNN-2): a single role feeds the fusion map.
// uniform_sum (TrustGNN-3): every chain type weighted 1 instead of attention.
enum class Variant { full, trustee_only, trustor_only, uniform_sum };

std::string to_string(Variant v);
Variant parse_variant(std::string_view s);

enum class EdgeAttrMode { learnable, one_hot };

std::string to_string(EdgeAttrMode m);
EdgeAttrMode parse_edge_attr_mode(std::string_view s);

struct ModelConfig {
  std::size_t num_nodes = 0;
  std::size_t num_relations = 4;
  std::size_t node_attr_dim = 1024;
  std::size_t edge_attr_width = 1024;  // learnable edge attributes; one-hot uses |R|
  std::size_t dim = 128;               // embedding, attention and fused width; even
  Variant variant = Variant::full;
  EdgeAttrMode edge_attr = EdgeAttrMode::learnable;
  ChainIndex chains;
  double unit_eps = 1e-12;

  std::size_t edge_attr_dim() const { return edge_attr == EdgeAttrMode::one_hot ? num_relations : edge_attr_width; }
  bool uses_trustee() const { return variant != Variant::trustor_only; }
  bool uses_trustor() const { return variant != Variant::trustee_only; }
  std::size_t fuse_in_dim() const { return (uses_trustee() && uses_trustor()) ? 2 * dim : dim; }
  void validate() const;
};

// Parameter names, shared by initialisation, checkpoints and tests.
namespace names {
inline constexpr const char* kNodeAttr = "node_attr";
inline constexpr const char* kEdgeAttr = "edge_attr";
inline constexpr const char* kWNode = "W_node";
inline constexpr const char* kWFuse = "W_fuse";
inline constexpr const char* kMlpW1 = "mlp/W1";
inline constexpr const char* kMlpB1 = "mlp/b1";
inline constexpr const char* kMlpW2 = "mlp/W2";
inline constexpr const char* kMlpB2 = "mlp/b2";
std::string w_edge(std::size_t rel);
std::string w_chain(std::size_t j, Direction role);
std::string attn_w(Direction role);
std::string attn_b(Direction role);
std::string attn_q(Direction role);
}  // namespace names

// Expected shape of every parameter for `config`.
std::map<std::string, nd::Shape> param_shapes(const ModelConfig& config);

// Fan-in scaled uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
ParamStore init_params(const ModelConfig& config, std::uint64_t seed);

// Throws ShapeError listing every mismatch between `params` and `config`.
void validate_params(const ModelConfig& config, const ParamStore& params);

// Attribute transform output.
struct Attributes {
  Var h;                     // |V| x d
  std::vector<Var> rel_rot;  // per relation, 1 x d unit-modulus rotations
};

Attributes transform_attributes(const ModelConfig& config, Tape& tape, const VarMap& params);

// Composed rotation r_{t1} ∘ ... ∘ r_{tk} of a chain.
Var compose_rotation(const ChainType& chain, const std::vector<Var>& rel_rot);

// Sparse reach sums on the tape, memoised by chain prefix (trustee) or suffix (trustor).
class ReachCache {
 public:
  ReachCache(const TrustGraph& g, Var h) : graph_(g), h_(h) {}
  Var get(const ChainType& chain, Direction dir);

 private:
  const TrustGraph& graph_;
  Var h_;
  std::map<std::pair<std::vector<graph::RelationId>, Direction>, Var> memo_;
};

// trustee: reach ∘ ρ; trustor: reach ∘ conj(ρ).
Var propagate_chain_type(ReachCache& reach, const ChainType& chain, Direction dir, const std::vector<Var>& rel_rot);

// W_{P_j}·(h_v + messages_v) for every node.
Var aggregate_chain_type(const Var& h, const Var& messages, const Var& w_chain);

// softmax_j( mean_v qᵀ tanh(W h^{P_j}_v + b) ), returned as 1 x J.
Var attention_weights(const std::vector<Var>& per_type, const Var& w, const Var& b, const Var& q);

struct ForwardState {
  Var h;
  std::vector<Var> rel_rot;
  std::vector<Var> trustee_types;  // h^{P_j}
  std::vector<Var> trustor_types;  // h̄^{P_j}
  Var alpha;                       // 1 x J, invalid when the role is unused
  Var alpha_bar;
  Var z;
  Var z_bar;
  Var z_final;  // |V| x d
};

ForwardState forward(const ModelConfig& config, const TrustGraph& g, Tape& tape, const VarMap& params);

// Z_final = W_fuse·(Z ∥ Z̄), or W_fuse applied to the single role a variant keeps.
// Z and Z̄ are the attention-weighted sums built in forward().
Var fuse_roles(const ModelConfig& config, const Var& z, const Var& z_bar, const Var& w_fuse);

// MLP logits (|pairs| x |R|) for ordered (src, dst) pairs.
Var pair_logits(const Var& z_final, std::span<const Edge> pairs, const VarMap& params);

// Class distribution for a single ordered pair. Throws on u == v.
std::vector<double> predict_pair(const Tensor& z_final, graph::NodeId u, graph::NodeId v, const ParamStore& params);

// Mean cross-entropy over `edges` (labels are the relation ids).
Var model_loss(const ForwardState& state, std::span<const Edge> edges, const VarMap& params);

// forward() followed by the loss above.
Var model_loss(const ModelConfig& config, const TrustGraph& g, std::span<const Edge> edges, Tape& tape,
               const VarMap& params);

}  // namespace trustgnn::model
