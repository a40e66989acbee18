#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "trustgnn/error.hpp"
#include "trustgnn/model.hpp"

using namespace trustgnn;
using namespace trustgnn::model;
using graph::Path;
using testing::random_tensor;

namespace {

ModelConfig small_config(const TrustGraph& g, std::size_t k = 2, Variant variant = Variant::full) {
  ModelConfig c;
  c.num_nodes = g.num_nodes();
  c.num_relations = g.num_relations();
  c.node_attr_dim = 6;
  c.edge_attr_width = 5;
  c.dim = 4;
  c.variant = variant;
  c.chains = graph::enumerate_chain_types(g.num_relations(), k, graph::ChainMode::upto_k);
  return c;
}

double rel_err(const Tensor& a, const Tensor& b) {
  double scale = 1.0;
  for (double v : b.data()) scale = std::max(scale, std::abs(v));
  return nd::max_abs_diff(a, b) / scale;
}

Tensor row_of(const Tensor& t, std::size_t r) {
  Tensor out(1, t.cols());
  std::copy(t.row(r).begin(), t.row(r).end(), out.row(0).begin());
  return out;
}

// Literal per-path evaluation: h_u ∘ r_1 ∘ ... ∘ r_k (trustee) or h_u ∘ r̄_k ∘ ... ∘ r̄_1 (trustor),
// applied step by step along every brute-forced walk.
Tensor per_path_messages(const TrustGraph& g, const ChainType& chain, Direction dir, const Tensor& h,
                         const std::vector<Tensor>& rot) {
  Tensor out(g.num_nodes(), h.cols());
  for (graph::NodeId v = 0; v < g.num_nodes(); ++v) {
    for (const Path& p : graph::brute_force_chain_paths(g, chain, dir, v)) {
      const graph::NodeId far = dir == Direction::trustee ? p.front() : p.back();
      Tensor msg = row_of(h, far);
      if (dir == Direction::trustee) {
        for (auto t : chain.rels) msg = nd::complex_hadamard(msg, rot[t]);
      } else {
        for (auto it = chain.rels.rbegin(); it != chain.rels.rend(); ++it)
          msg = nd::complex_hadamard(msg, nd::complex_conjugate(rot[*it]));
      }
      for (std::size_t c = 0; c < h.cols(); ++c) out(v, c) += msg(0, c);
    }
  }
  return out;
}

// Smallest |pre-activation| of the MLP hidden layer over `edges`.
double relu_margin(const ModelConfig& c, const TrustGraph& g, const ParamStore& p) {
  Tape tape;
  const Tensor z = forward(c, g, tape, nd::bind_constants(tape, p)).z_final.value();
  const Tensor& w1 = p.at(names::kMlpW1);
  double margin = std::numeric_limits<double>::infinity();
  for (const Edge& e : g.edges()) {
    for (std::size_t j = 0; j < w1.cols(); ++j) {
      double pre = p.at(names::kMlpB1)(0, j);
      for (std::size_t i = 0; i < z.cols(); ++i) pre += z(e.src, i) * w1(i, j) + z(e.dst, i) * w1(i + z.cols(), j);
      margin = std::min(margin, std::abs(pre));
    }
  }
  return margin;
}

// Parameters whose hidden units stay well away from the relu kink, so central differences are smooth.
ParamStore kink_free_params(const ModelConfig& c, const TrustGraph& g) {
  for (std::uint64_t seed = 0;; ++seed) {
    ParamStore p = init_params(c, seed);
    if (relu_margin(c, g, p) > 1e-3) return p;
  }
}

TrustGraph toy_graph(std::uint64_t seed, std::size_t nodes = 10, std::size_t edges = 24, std::size_t rels = 3) {
  std::mt19937_64 rng(seed);
  return testing::random_graph(nodes, edges, rels, rng);
}

}  // namespace

TEST_CASE("transform_attributes") {
  const auto g = toy_graph(31);
  ModelConfig c = small_config(g);
  c.node_attr_dim = c.dim;
  ParamStore p = init_params(c, 1);
  p[names::kWNode] = Tensor::identity(c.dim);
  Tape tape;
  auto vars = nd::bind_leaves(tape, p);
  const Attributes a = transform_attributes(c, tape, vars);
  CHECK(a.h.value() == p.at(names::kNodeAttr));
  REQUIRE(a.rel_rot.size() == 3);
  for (const Var& r : a.rel_rot) {
    const Tensor mod = nd::complex_modulus(r.value());
    for (double m : mod.data()) CHECK(std::abs(m - 1.0) <= 1e-6);
  }
}

TEST_CASE("one-hot edge attributes select the transform row") {
  const auto g = toy_graph(32);
  ModelConfig c = small_config(g);
  c.edge_attr = EdgeAttrMode::one_hot;
  const ParamStore p = init_params(c, 2);
  CHECK_FALSE(p.contains(names::kEdgeAttr));
  CHECK(p.at(names::w_edge(0)).shape() == nd::Shape{3, c.dim});
  Tape tape;
  auto vars = nd::bind_leaves(tape, p);
  const Attributes a = transform_attributes(c, tape, vars);
  for (std::size_t i = 0; i < 3; ++i) {
    const Tensor expected = nd::complex_unit_normalize(row_of(p.at(names::w_edge(i)), i));
    CHECK(nd::max_abs_diff(a.rel_rot[i].value(), expected) <= 1e-15);
  }
}

TEST_CASE("propagate_chain_type: single edge gives h_u rotated by r_t") {
  const TrustGraph g(3, 2, {{0, 2, 1}});
  std::mt19937_64 rng(33);
  Tape tape;
  const Tensor hv = random_tensor(3, 6, rng);
  Var h = tape.constant(hv);
  std::vector<Var> rot{tape.constant(nd::complex_unit_normalize(random_tensor(1, 6, rng))),
                       tape.constant(nd::complex_unit_normalize(random_tensor(1, 6, rng)))};
  ReachCache reach(g, h);
  const Tensor m = propagate_chain_type(reach, ChainType{{1}}, Direction::trustee, rot).value();
  CHECK(nd::max_abs_diff(row_of(m, 2), nd::complex_hadamard(row_of(hv, 0), rot[1].value())) <= 1e-15);
  CHECK(nd::max_abs_diff(row_of(m, 0), Tensor(1, 6)) == 0.0);
}

TEST_CASE("factorized propagation equals literal per-path evaluation") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 5 + rng() % 36;
    const std::size_t rels = 1 + rng() % 4;
    const std::size_t edges = std::min(n * (n - 1), 2 * n + rng() % (2 * n));
    const auto g = testing::random_graph(n, edges, rels, rng);
    Tape tape;
    const Tensor hv = random_tensor(n, 6, rng);
    std::vector<Tensor> rot_v;
    std::vector<Var> rot;
    for (std::size_t t = 0; t < rels; ++t) {
      rot_v.push_back(nd::complex_unit_normalize(random_tensor(1, 6, rng)));
      rot.push_back(tape.constant(rot_v.back()));
    }
    ReachCache reach(g, tape.constant(hv));
    for (const auto& chain : graph::enumerate_chain_types(rels, 3, graph::ChainMode::upto_k).types) {
      for (Direction dir : {Direction::trustee, Direction::trustor}) {
        const Tensor fast = propagate_chain_type(reach, chain, dir, rot).value();
        CHECK(rel_err(fast, per_path_messages(g, chain, dir, hv, rot_v)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("trustor messages equal trustee messages on the reversed graph with conjugate rotations") {
  const auto g = toy_graph(35, 15, 45, 3);
  const auto rev = g.reversed();
  std::mt19937_64 rng(36);
  Tape tape;
  Var h = tape.constant(random_tensor(15, 8, rng));
  std::vector<Var> rot, rot_conj;
  for (int t = 0; t < 3; ++t) {
    rot.push_back(tape.constant(nd::complex_unit_normalize(random_tensor(1, 8, rng))));
    rot_conj.push_back(tape.constant(nd::complex_conjugate(rot.back().value())));
  }
  ReachCache fwd(g, h), back(rev, h);
  for (const auto& chain : graph::enumerate_chain_types(3, 2, graph::ChainMode::upto_k).types) {
    ChainType flipped{{chain.rels.rbegin(), chain.rels.rend()}};
    const Tensor a = propagate_chain_type(fwd, chain, Direction::trustor, rot).value();
    const Tensor b = propagate_chain_type(back, flipped, Direction::trustee, rot_conj).value();
    CHECK(rel_err(a, b) <= 1e-12);
  }
}

TEST_CASE("rotation composition consistency") {
  std::mt19937_64 rng(37);
  Tape tape;
  std::vector<Var> rot;
  for (int t = 0; t < 3; ++t) rot.push_back(tape.constant(nd::complex_unit_normalize(random_tensor(1, 10, rng))));
  const Tensor rho = compose_rotation(ChainType{{0, 2}}, rot).value();
  CHECK(rho == nd::complex_hadamard(rot[0].value(), rot[2].value()));
  const Tensor h = random_tensor(4, 10, rng);
  const Tensor stepwise = nd::complex_hadamard(nd::complex_hadamard(h, rot[0].value()), rot[2].value());
  CHECK(nd::max_abs_diff(stepwise, nd::complex_hadamard(h, rho)) <= 1e-10);
}

TEST_CASE("aggregate_chain_type") {
  std::mt19937_64 rng(38);
  Tape tape;
  const Tensor hv = random_tensor(7, 4, rng);
  const Tensor mv = random_tensor(7, 4, rng);
  const Tensor wv = random_tensor(4, 4, rng);
  Var h = tape.constant(hv), m = tape.constant(mv), w = tape.constant(wv);

  CHECK(aggregate_chain_type(h, tape.constant(Tensor(7, 4)), w).value() == nd::matmul(hv, wv));
  Tensor sum = hv;
  sum += mv;
  CHECK(nd::max_abs_diff(aggregate_chain_type(h, m, tape.constant(Tensor::identity(4))).value(), sum) <= 1e-15);

  // naive per-node loop: out_v = (h_v + m_v) · W
  Tensor oracle(7, 4);
  for (std::size_t v = 0; v < 7; ++v)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t i = 0; i < 4; ++i) oracle(v, j) += (hv(v, i) + mv(v, i)) * wv(i, j);
  CHECK(nd::max_abs_diff(aggregate_chain_type(h, m, w).value(), oracle) <= 1e-10);
}

TEST_CASE("attention_weights") {
  std::mt19937_64 rng(39);
  Tape tape;
  Var w = tape.constant(random_tensor(4, 4, rng));
  Var b = tape.constant(random_tensor(1, 4, rng));
  Var q = tape.constant(random_tensor(4, 1, rng));

  Var same = tape.constant(random_tensor(6, 4, rng));
  const Tensor uniform = attention_weights({same, same, same, same, same}, w, b, q).value();
  for (double a : uniform.data()) CHECK(a == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(attention_weights({same}, w, b, q).value().item() == 1.0);

  std::vector<Var> types;
  for (int j = 0; j < 3; ++j) types.push_back(tape.constant(random_tensor(6, 4, rng, 2.0)));
  const Tensor alpha = attention_weights(types, w, b, q).value();
  // direct formula
  std::vector<double> scores;
  for (const Var& t : types) {
    double s = 0.0;
    for (std::size_t v = 0; v < 6; ++v) {
      for (std::size_t k = 0; k < 4; ++k) {
        double pre = b.value()(0, k);
        for (std::size_t i = 0; i < 4; ++i) pre += t.value()(v, i) * w.value()(i, k);
        s += q.value()(k, 0) * std::tanh(pre);
      }
    }
    scores.push_back(s / 6.0);
  }
  double denom = 0.0;
  for (double s : scores) denom += std::exp(s);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(alpha(0, j) - std::exp(scores[j]) / denom) <= 1e-10);
}

TEST_CASE("fuse_roles and weighted aggregation") {
  const auto g = toy_graph(40);
  ModelConfig c = small_config(g);
  std::mt19937_64 rng(41);
  Tape tape;
  Var z = tape.constant(random_tensor(10, 4, rng));
  Var zb = tape.constant(random_tensor(10, 4, rng));

  Tensor block(8, 4);
  for (std::size_t i = 0; i < 4; ++i) block(i, i) = 1.0;
  CHECK(fuse_roles(c, z, zb, tape.constant(block)).value() == z.value());

  Var hp = tape.constant(random_tensor(10, 4, rng));
  CHECK(nd::weighted_sum({hp}, tape.constant(Tensor::scalar(1.0))).value() == hp.value());

  const Tensor wf = random_tensor(8, 4, rng);
  Tensor oracle(10, 4);
  for (std::size_t v = 0; v < 10; ++v)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t i = 0; i < 4; ++i) oracle(v, j) += z.value()(v, i) * wf(i, j) + zb.value()(v, i) * wf(i + 4, j);
  CHECK(nd::max_abs_diff(fuse_roles(c, z, zb, tape.constant(wf)).value(), oracle) <= 1e-10);
}

TEST_CASE("forward satisfies the simplex contract and shapes") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = toy_graph(50 + seed, 12, 30, 4);
    const ModelConfig c = small_config(g);
    const ParamStore p = init_params(c, seed);
    Tape tape;
    const ForwardState st = forward(c, g, tape, nd::bind_constants(tape, p));
    for (const Var& a : {st.alpha, st.alpha_bar}) {
      REQUIRE(a.value().cols() == 20);
      double total = 0.0;
      for (double v : a.value().data()) {
        CHECK(v > 0.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) <= 1e-6);
    }
    CHECK(st.z_final.shape() == nd::Shape{12, 4});
    CHECK(st.trustee_types.size() == 20);
  }
}

TEST_CASE("permuting the chain index permutes alpha and leaves Z unchanged") {
  const auto g = toy_graph(42, 10, 30, 2);
  const ModelConfig c = small_config(g);
  const ParamStore p = init_params(c, 3);
  std::vector<std::size_t> perm(c.chains.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(43);
  std::shuffle(perm.begin(), perm.end(), rng);

  ModelConfig c2 = c;
  ParamStore p2 = p;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    c2.chains.types[j] = c.chains.types[perm[j]];
    for (Direction role : {Direction::trustee, Direction::trustor})
      p2[names::w_chain(j, role)] = p.at(names::w_chain(perm[j], role));
  }
  Tape t1, t2;
  const ForwardState a = forward(c, g, t1, nd::bind_constants(t1, p));
  const ForwardState b = forward(c2, g, t2, nd::bind_constants(t2, p2));
  for (std::size_t j = 0; j < perm.size(); ++j) {
    CHECK(std::abs(b.alpha.value()[j] - a.alpha.value()[perm[j]]) <= 1e-12);
    CHECK(std::abs(b.alpha_bar.value()[j] - a.alpha_bar.value()[perm[j]]) <= 1e-12);
  }
  CHECK(rel_err(b.z.value(), a.z.value()) <= 1e-12);
  CHECK(rel_err(b.z_final.value(), a.z_final.value()) <= 1e-12);
}

TEST_CASE("predict_pair") {
  const auto g = toy_graph(44);
  const ModelConfig c = small_config(g);
  ParamStore p = init_params(c, 4);
  std::mt19937_64 rng(45);
  const Tensor z = random_tensor(10, 4, rng);

  const auto dist = predict_pair(z, 1, 2, p);
  REQUIRE(dist.size() == 3);
  double total = 0.0;
  for (double v : dist) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    total += v;
  }
  CHECK(std::abs(total - 1.0) <= 1e-9);

  // generic weights are asymmetric
  const auto back = predict_pair(z, 2, 1, p);
  CHECK(nd::max_abs_diff(Tensor(1, 3, dist), Tensor(1, 3, back)) > 1e-6);

  // symmetric predictor weights with z_u = z_v give symmetric output
  Tensor zs = z;
  std::copy(zs.row(1).begin(), zs.row(1).end(), zs.row(2).begin());
  Tensor& w1 = p[names::kMlpW1];
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) w1(i + 4, j) = w1(i, j);
  const auto s1 = predict_pair(zs, 1, 2, p);
  const auto s2 = predict_pair(zs, 2, 1, p);
  CHECK(s1 == s2);

  CHECK_THROWS_AS(predict_pair(z, 3, 3, p), DataError);
}

TEST_CASE("model_loss closed forms") {
  const auto g = toy_graph(46);
  const ModelConfig c = small_config(g);
  ParamStore p = init_params(c, 5);
  p[names::kMlpW2].fill(0.0);

  SUBCASE("uniform predictor gives ln |R|") {
    p[names::kMlpB2].fill(0.0);
    Tape tape;
    const Var loss = model_loss(c, g, g.edges(), tape, nd::bind_constants(tape, p));
    CHECK(std::abs(loss.value().item() - std::log(3.0)) <= 1e-9);
  }
  SUBCASE("confident-correct predictor gives ~0") {
    const Edge e = g.edges().front();
    p[names::kMlpB2].fill(0.0);
    p[names::kMlpB2](0, e.rel) = 50.0;
    Tape tape;
    const std::vector<Edge> one{e};
    const Var loss = model_loss(c, g, one, tape, nd::bind_constants(tape, p));
    CHECK(loss.value().item() <= 1e-6);
  }
  SUBCASE("empty batch") {
    Tape tape;
    CHECK_THROWS_AS(model_loss(c, g, std::span<const Edge>{}, tape, nd::bind_constants(tape, p)), DataError);
  }
}

TEST_CASE("end-to-end gradient check on a 10-node toy graph") {
  const auto g = toy_graph(47);
  // Round-off in the differenced loss is ~1e-11; gradients below 1e-6 are compared absolutely.
  nd::GradCheckOptions opts;
  opts.eps = 1e-5;
  opts.denom_floor = 1e-6;
  for (Variant v : {Variant::full, Variant::trustee_only, Variant::trustor_only, Variant::uniform_sum}) {
    const ModelConfig c = small_config(g, 2, v);
    const ParamStore p = kink_free_params(c, g);
    const auto report = nd::finite_diff_check(
        [&](Tape& tape, const VarMap& vars) { return model_loss(c, g, g.edges(), tape, vars); }, p, opts);
    INFO("variant " << to_string(v) << " worst " << report.worst_param << "[" << report.worst_index << "] analytic "
                    << report.worst_analytic << " numeric " << report.worst_numeric);
    CHECK(report.max_rel_error <= 1e-4);
  }
}

TEST_CASE("variants") {
  const auto g = toy_graph(48);
  CHECK_THROWS_AS(parse_variant("trustgnn-4"), UsageError);
  CHECK(parse_variant("trustgnn-2") == Variant::trustor_only);

  SUBCASE("trustgnn-3 equals full with attention pinned to one") {
    const ModelConfig full = small_config(g, 2, Variant::full);
    const ModelConfig sum = small_config(g, 2, Variant::uniform_sum);
    const ParamStore p = init_params(full, 7);
    Tape t1, t2;
    const ForwardState a = forward(full, g, t1, nd::bind_constants(t1, p));
    const ForwardState b = forward(sum, g, t2, nd::bind_constants(t2, p));
    const Var ones = t1.constant(Tensor(1, full.chains.size(), 1.0));
    const Var z = nd::weighted_sum(a.trustee_types, ones);
    const Var zb = nd::weighted_sum(a.trustor_types, ones);
    const Var pinned = fuse_roles(full, z, zb, t1.constant(p.at(names::kWFuse)));
    CHECK(pinned.value() == b.z_final.value());
  }

  SUBCASE("trustgnn-1 sends no gradient to trustor-role parameters") {
    const ModelConfig c = small_config(g, 2, Variant::trustee_only);
    const ParamStore p = init_params(c, 8);
    CHECK(p.at(names::kWFuse).shape() == nd::Shape{c.dim, c.dim});
    Tape tape;
    auto vars = nd::bind_leaves(tape, p);
    Var loss = model_loss(c, g, g.edges(), tape, vars);
    tape.backward(loss);
    const auto grads = nd::collect_grads(tape, vars);
    std::size_t barred = 0;
    for (const auto& [name, grad] : grads) {
      const bool trustor_side = name.starts_with("W_P_bar/") || name.starts_with("attn_bar/");
      if (!trustor_side) continue;
      ++barred;
      CHECK(std::all_of(grad.data().begin(), grad.data().end(), [](double x) { return x == 0.0; }));
    }
    CHECK(barred == c.chains.size() + 3);
    double trustee_mag = 0.0;
    for (double x : grads.at(names::w_chain(0, Direction::trustee)).data()) trustee_mag += std::abs(x);
    CHECK(trustee_mag > 0.0);
  }
}

TEST_CASE("parameter validation lists every mismatch") {
  const auto g = toy_graph(49);
  const ModelConfig c = small_config(g);
  ParamStore p = init_params(c, 9);
  CHECK_NOTHROW(validate_params(c, p));
  p[names::kWFuse] = Tensor(3, 3);
  p.erase(names::kMlpB1);
  try {
    validate_params(c, p);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("W_fuse: expected [8x4], found [3x3]") != std::string::npos);
    CHECK(msg.find("missing mlp/b1") != std::string::npos);
  }
  ModelConfig odd = c;
  odd.dim = 5;
  CHECK_THROWS_AS(init_params(odd, 1), UsageError);
}
