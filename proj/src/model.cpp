#include "trustgnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "trustgnn/error.hpp"

namespace trustgnn::model {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::trustee_only: return "trustgnn-1";
    case Variant::trustor_only: return "trustgnn-2";
    case Variant::uniform_sum: return "trustgnn-3";
  }
  return "full";
}

Variant parse_variant(std::string_view s) {
  if (s == "full") return Variant::full;
  if (s == "trustgnn-1") return Variant::trustee_only;
  if (s == "trustgnn-2") return Variant::trustor_only;
  if (s == "trustgnn-3") return Variant::uniform_sum;
  throw UsageError("unknown variant '" + std::string(s) + "' (expected full, trustgnn-1, trustgnn-2, trustgnn-3)");
}

std::string to_string(EdgeAttrMode m) { return m == EdgeAttrMode::one_hot ? "one-hot" : "learnable"; }

EdgeAttrMode parse_edge_attr_mode(std::string_view s) {
  if (s == "learnable") return EdgeAttrMode::learnable;
  if (s == "one-hot" || s == "onehot") return EdgeAttrMode::one_hot;
  throw UsageError("unknown edge attribute mode '" + std::string(s) + "' (expected learnable or one-hot)");
}

void ModelConfig::validate() const {
  if (num_nodes == 0) throw UsageError("model needs at least one node");
  if (num_relations == 0) throw UsageError("model needs at least one relation");
  if (node_attr_dim == 0 || edge_attr_width == 0 || dim == 0) throw UsageError("dimensions must be positive");
  if (dim % 2 != 0) throw UsageError("embedding dimension must be even, got " + std::to_string(dim));
  if (chains.types.empty()) throw UsageError("chain index is empty");
  for (const ChainType& c : chains.types) {
    if (c.rels.empty()) throw UsageError("chain type of length 0");
    for (auto r : c.rels) {
      if (r >= num_relations) throw UsageError("chain type references relation " + std::to_string(r));
    }
  }
}

namespace names {

namespace {
const char* role_suffix(Direction role) { return role == Direction::trustee ? "" : "_bar"; }
}  // namespace

std::string w_edge(std::size_t rel) { return "W_edge/" + std::to_string(rel); }
std::string w_chain(std::size_t j, Direction role) {
  return std::string("W_P") + role_suffix(role) + "/" + std::to_string(j);
}
std::string attn_w(Direction role) { return std::string("attn") + role_suffix(role) + "/W"; }
std::string attn_b(Direction role) { return std::string("attn") + role_suffix(role) + "/b"; }
std::string attn_q(Direction role) { return std::string("attn") + role_suffix(role) + "/q"; }

}  // namespace names

std::map<std::string, nd::Shape> param_shapes(const ModelConfig& c) {
  std::map<std::string, nd::Shape> s;
  const std::size_t d = c.dim;
  s[names::kNodeAttr] = {c.num_nodes, c.node_attr_dim};
  if (c.edge_attr == EdgeAttrMode::learnable) s[names::kEdgeAttr] = {c.num_relations, c.edge_attr_width};
  s[names::kWNode] = {c.node_attr_dim, d};
  for (std::size_t i = 0; i < c.num_relations; ++i) s[names::w_edge(i)] = {c.edge_attr_dim(), d};
  for (Direction role : {Direction::trustee, Direction::trustor}) {
    for (std::size_t j = 0; j < c.chains.size(); ++j) s[names::w_chain(j, role)] = {d, d};
    s[names::attn_w(role)] = {d, d};
    s[names::attn_b(role)] = {1, d};
    s[names::attn_q(role)] = {d, 1};
  }
  s[names::kWFuse] = {c.fuse_in_dim(), d};
  s[names::kMlpW1] = {2 * d, d};
  s[names::kMlpB1] = {1, d};
  s[names::kMlpW2] = {d, c.num_relations};
  s[names::kMlpB2] = {1, c.num_relations};
  return s;
}

ParamStore init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ParamStore params;
  for (const auto& [name, shape] : param_shapes(config)) {
    Tensor t(shape[0], shape[1]);
    const bool is_bias = name.ends_with("/b") || name.ends_with("/b1") || name.ends_with("/b2");
    if (!is_bias) {
      // Attribute tables are scaled by their own width, weights by their fan-in.
      const std::size_t fan = (name == names::kNodeAttr || name == names::kEdgeAttr) ? shape[1] : shape[0];
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : t.data()) v = dist(rng);
    }
    params.emplace(name, std::move(t));
  }
  return params;
}

void validate_params(const ModelConfig& config, const ParamStore& params) {
  const auto expected = param_shapes(config);
  std::string diff;
  for (const auto& [name, shape] : expected) {
    auto it = params.find(name);
    if (it == params.end()) {
      diff += "\n  missing " + name + " " + nd::shape_str(shape);
    } else if (it->second.shape() != shape) {
      diff += "\n  " + name + ": expected " + nd::shape_str(shape) + ", found " + nd::shape_str(it->second.shape());
    }
  }
  for (const auto& [name, t] : params) {
    if (!expected.contains(name)) diff += "\n  unexpected " + name + " " + nd::shape_str(t.shape());
  }
  if (!diff.empty()) throw ShapeError("parameter shapes do not match the model configuration:" + diff);
}

Attributes transform_attributes(const ModelConfig& config, Tape& tape, const VarMap& params) {
  Attributes out;
  out.h = nd::matmul(params.at(names::kNodeAttr), params.at(names::kWNode));
  const Var edge_attr = config.edge_attr == EdgeAttrMode::one_hot
                            ? tape.constant(Tensor::identity(config.num_relations))
                            : params.at(names::kEdgeAttr);
  out.rel_rot.reserve(config.num_relations);
  for (std::size_t i = 0; i < config.num_relations; ++i) {
    Var x = nd::gather_rows(edge_attr, {i});
    out.rel_rot.push_back(nd::complex_unit_normalize(nd::matmul(x, params.at(names::w_edge(i))), config.unit_eps));
  }
  return out;
}

Var compose_rotation(const ChainType& chain, const std::vector<Var>& rel_rot) {
  Var rho = rel_rot.at(chain.rels.front());
  for (std::size_t i = 1; i < chain.rels.size(); ++i) rho = nd::complex_hadamard(rho, rel_rot.at(chain.rels[i]));
  return rho;
}

Var ReachCache::get(const ChainType& chain, Direction dir) {
  auto key = std::make_pair(chain.rels, dir);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  Var result;
  if (dir == Direction::trustee) {
    // A_{tk}ᵀ · reach(t1..t{k-1})
    const auto last = chain.rels.back();
    Var inner = h_;
    if (chain.rels.size() > 1) inner = get(ChainType{{chain.rels.begin(), chain.rels.end() - 1}}, dir);
    result = nd::spmm(graph_.in_adjacency(last), graph_.out_adjacency(last), inner);
  } else {
    // A_{t1} · reach(t2..tk)
    const auto first = chain.rels.front();
    Var inner = h_;
    if (chain.rels.size() > 1) inner = get(ChainType{{chain.rels.begin() + 1, chain.rels.end()}}, dir);
    result = nd::spmm(graph_.out_adjacency(first), graph_.in_adjacency(first), inner);
  }
  memo_.emplace(std::move(key), result);
  return result;
}

Var propagate_chain_type(ReachCache& reach, const ChainType& chain, Direction dir, const std::vector<Var>& rel_rot) {
  Var rho = compose_rotation(chain, rel_rot);
  if (dir == Direction::trustor) rho = nd::complex_conjugate(rho);
  return nd::complex_hadamard(reach.get(chain, dir), rho);
}

Var aggregate_chain_type(const Var& h, const Var& messages, const Var& w_chain) {
  return nd::matmul(nd::add(h, messages), w_chain);
}

Var attention_weights(const std::vector<Var>& per_type, const Var& w, const Var& b, const Var& q) {
  if (per_type.empty()) throw ShapeError("attention_weights: no chain types");
  std::vector<Var> scores;
  scores.reserve(per_type.size());
  for (const Var& hp : per_type) {
    Var s = nd::tanh(nd::add_row(nd::matmul(hp, w), b));
    scores.push_back(nd::matmul(nd::mean_rows(s), q));
  }
  return nd::softmax(nd::concat_cols(scores));
}

Var fuse_roles(const ModelConfig& config, const Var& z, const Var& z_bar, const Var& w_fuse) {
  if (config.uses_trustee() && config.uses_trustor()) return nd::matmul(nd::concat_cols({z, z_bar}), w_fuse);
  return nd::matmul(config.uses_trustee() ? z : z_bar, w_fuse);
}

ForwardState forward(const ModelConfig& config, const TrustGraph& g, Tape& tape, const VarMap& params) {
  if (g.num_nodes() != config.num_nodes || g.num_relations() != config.num_relations) {
    throw ShapeError("graph (" + std::to_string(g.num_nodes()) + " nodes, " + std::to_string(g.num_relations()) +
                     " relations) does not match model (" + std::to_string(config.num_nodes) + ", " +
                     std::to_string(config.num_relations) + ")");
  }
  ForwardState st;
  Attributes attrs = transform_attributes(config, tape, params);
  st.h = attrs.h;
  st.rel_rot = attrs.rel_rot;
  ReachCache reach(g, st.h);
  const std::size_t types = config.chains.size();

  auto role_pass = [&](Direction role, std::vector<Var>& per_type, Var& weights, Var& z) {
    per_type.reserve(types);
    for (std::size_t j = 0; j < types; ++j) {
      Var msg = propagate_chain_type(reach, config.chains.types[j], role, st.rel_rot);
      per_type.push_back(aggregate_chain_type(st.h, msg, params.at(names::w_chain(j, role))));
    }
    if (config.variant == Variant::uniform_sum) {
      weights = tape.constant(Tensor(1, types, 1.0));
    } else {
      weights = attention_weights(per_type, params.at(names::attn_w(role)), params.at(names::attn_b(role)),
                                  params.at(names::attn_q(role)));
    }
    z = nd::weighted_sum(per_type, weights);
  };

  if (config.uses_trustee()) role_pass(Direction::trustee, st.trustee_types, st.alpha, st.z);
  if (config.uses_trustor()) role_pass(Direction::trustor, st.trustor_types, st.alpha_bar, st.z_bar);
  st.z_final = fuse_roles(config, st.z, st.z_bar, params.at(names::kWFuse));
  return st;
}

Var pair_logits(const Var& z_final, std::span<const Edge> pairs, const VarMap& params) {
  std::vector<std::size_t> src, dst;
  src.reserve(pairs.size());
  dst.reserve(pairs.size());
  for (const Edge& e : pairs) {
    if (e.src == e.dst) throw DataError("trust pair with identical endpoints " + std::to_string(e.src));
    src.push_back(e.src);
    dst.push_back(e.dst);
  }
  Var x = nd::concat_cols({nd::gather_rows(z_final, std::move(src)), nd::gather_rows(z_final, std::move(dst))});
  Var hidden = nd::relu(nd::add_row(nd::matmul(x, params.at(names::kMlpW1)), params.at(names::kMlpB1)));
  return nd::add_row(nd::matmul(hidden, params.at(names::kMlpW2)), params.at(names::kMlpB2));
}

std::vector<double> predict_pair(const Tensor& z_final, graph::NodeId u, graph::NodeId v, const ParamStore& params) {
  if (u == v) throw DataError("predict_pair: trustor and trustee must differ (node " + std::to_string(u) + ")");
  if (u >= z_final.rows() || v >= z_final.rows()) throw DataError("predict_pair: node id out of range");
  const std::size_t d = z_final.cols();
  Tensor x(1, 2 * d);
  std::copy(z_final.row(u).begin(), z_final.row(u).end(), x.row(0).begin());
  std::copy(z_final.row(v).begin(), z_final.row(v).end(), x.row(0).begin() + static_cast<std::ptrdiff_t>(d));
  Tensor hidden = nd::matmul(x, params.at(names::kMlpW1));
  hidden += params.at(names::kMlpB1);
  for (double& h : hidden.data()) h = h < 0.0 ? 0.0 : h;
  Tensor logits = nd::matmul(hidden, params.at(names::kMlpW2));
  logits += params.at(names::kMlpB2);
  const Tensor p = nd::softmax_rows(logits);
  return p.data();
}

Var model_loss(const ForwardState& state, std::span<const Edge> edges, const VarMap& params) {
  if (edges.empty()) throw DataError("model_loss: empty training batch");
  std::vector<std::size_t> labels;
  labels.reserve(edges.size());
  for (const Edge& e : edges) labels.push_back(e.rel);
  return nd::cross_entropy(pair_logits(state.z_final, edges, params), labels);
}

Var model_loss(const ModelConfig& config, const TrustGraph& g, std::span<const Edge> edges, Tape& tape,
               const VarMap& params) {
  if (edges.empty()) throw DataError("model_loss: empty training batch");
  return model_loss(forward(config, g, tape, params), edges, params);
}

}  // namespace trustgnn::model
