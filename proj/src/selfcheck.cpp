#include "trustgnn/selfcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "trustgnn/error.hpp"
#include "trustgnn/metrics.hpp"
#include "trustgnn/model.hpp"
#include "trustgnn/synthetic.hpp"
#include "trustgnn/train.hpp"

namespace trustgnn::selfcheck {

namespace {

using graph::ChainType;
using graph::Direction;
using graph::TrustGraph;
using nd::Tensor;

struct Outcome {
  bool passed;
  std::string detail;
};

Tensor uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Tensor t(rows, cols);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Tensor row_of(const Tensor& t, std::size_t r) {
  Tensor out(1, t.cols());
  std::copy(t.row(r).begin(), t.row(r).end(), out.row(0).begin());
  return out;
}

double rel_err(const Tensor& a, const Tensor& b) {
  double scale = 1.0;
  for (double v : b.data()) scale = std::max(scale, std::abs(v));
  return nd::max_abs_diff(a, b) / scale;
}

std::string sci(double v) {
  std::ostringstream os;
  os.precision(2);
  os << std::scientific << v;
  return os.str();
}

Outcome bound(const std::string& what, double worst, double tol) {
  return {worst <= tol, what + " " + sci(worst) + " (tol " + sci(tol) + ")"};
}

struct Corpus {
  std::vector<TrustGraph> graphs;
  std::vector<std::size_t> max_len;
};

Corpus make_corpus(const Options& o) {
  std::mt19937_64 rng(o.seed);
  Corpus c;
  for (std::size_t i = 0; i < o.graphs; ++i) {
    const std::size_t n = 2 + rng() % (o.max_nodes - 1);
    const std::size_t rels = 1 + rng() % 4;
    const std::size_t cap = n * (n - 1);
    const std::size_t edges = std::min(cap, 1 + rng() % (3 * n));
    c.graphs.push_back(synthetic::random_graph(n, edges, rels, rng()));
    c.max_len.push_back(1 + rng() % o.max_chain_length);
  }
  return c;
}

// Rotation properties on the injected Hadamard product.
Outcome rotation_modulus(const Options& o) {
  std::mt19937_64 rng(o.seed + 1);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Tensor h = uniform(4, 16, rng, 3.0);
    const Tensor r = nd::complex_unit_normalize(uniform(1, 16, rng));
    worst = std::max(worst, nd::max_abs_diff(nd::complex_modulus(o.hadamard(h, r)), nd::complex_modulus(h)));
  }
  return bound("max modulus drift", worst, 1e-10);
}

Outcome rotation_associativity(const Options& o) {
  std::mt19937_64 rng(o.seed + 2);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Tensor h = uniform(4, 16, rng, 3.0);
    const Tensor r1 = nd::complex_unit_normalize(uniform(1, 16, rng));
    const Tensor r2 = nd::complex_unit_normalize(uniform(1, 16, rng));
    worst = std::max(worst, nd::max_abs_diff(o.hadamard(o.hadamard(h, r1), r2), o.hadamard(h, o.hadamard(r1, r2))));
  }
  return bound("max deviation", worst, 1e-10);
}

Outcome rotation_inversion(const Options& o) {
  std::mt19937_64 rng(o.seed + 3);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Tensor h = uniform(4, 16, rng, 3.0);
    const Tensor r = nd::complex_unit_normalize(uniform(1, 16, rng));
    worst = std::max(worst, nd::max_abs_diff(o.hadamard(o.hadamard(h, r), nd::complex_conjugate(r)), h));
  }
  return bound("max |h∘r∘conj(r) - h|", worst, 1e-10);
}

Outcome rotation_commutativity(const Options& o) {
  std::mt19937_64 rng(o.seed + 4);
  for (int t = 0; t < 50; ++t) {
    const Tensor a = uniform(3, 12, rng);
    const Tensor b = uniform(3, 12, rng);
    if (!(o.hadamard(a, b) == o.hadamard(b, a))) return {false, "x∘y != y∘x at trial " + std::to_string(t)};
  }
  return {true, "50 trials, bitwise equal"};
}

Outcome reach_oracle(const Options& o, const Corpus& corpus) {
  std::mt19937_64 rng(o.seed + 5);
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < corpus.graphs.size(); ++i) {
    const TrustGraph& g = corpus.graphs[i];
    const Tensor h = uniform(g.num_nodes(), 4, rng);
    for (const auto& chain : graph::enumerate_chain_types(g.num_relations(), corpus.max_len[i], graph::ChainMode::upto_k).types) {
      for (Direction dir : {Direction::trustee, Direction::trustor}) {
        const Tensor fast = graph::chain_reach_sum(g, chain, dir, h);
        Tensor slow(g.num_nodes(), h.cols());
        for (graph::NodeId v = 0; v < g.num_nodes(); ++v) {
          for (const auto& p : graph::brute_force_chain_paths(g, chain, dir, v)) {
            const auto far = dir == Direction::trustee ? p.front() : p.back();
            for (std::size_t c = 0; c < h.cols(); ++c) slow(v, c) += h(far, c);
          }
        }
        worst = std::max(worst, rel_err(fast, slow));
        ++checked;
      }
    }
  }
  Outcome out = bound(std::to_string(corpus.graphs.size()) + " graphs, " + std::to_string(checked) +
                          " chain sums, max rel error",
                      worst, 1e-9);
  return out;
}

Tensor per_path(const TrustGraph& g, const ChainType& chain, Direction dir, const Tensor& h,
                const std::vector<Tensor>& rot) {
  Tensor out(g.num_nodes(), h.cols());
  for (graph::NodeId v = 0; v < g.num_nodes(); ++v) {
    for (const auto& p : graph::brute_force_chain_paths(g, chain, dir, v)) {
      Tensor msg = row_of(h, dir == Direction::trustee ? p.front() : p.back());
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

Outcome propagation_oracle(const Options& o, const Corpus& corpus) {
  std::mt19937_64 rng(o.seed + 6);
  double worst = 0.0;
  for (std::size_t i = 0; i < corpus.graphs.size(); ++i) {
    const TrustGraph& g = corpus.graphs[i];
    nd::Tape tape(false);
    const Tensor h = uniform(g.num_nodes(), 6, rng);
    std::vector<Tensor> rot;
    std::vector<nd::Var> rot_vars;
    for (std::size_t t = 0; t < g.num_relations(); ++t) {
      rot.push_back(nd::complex_unit_normalize(uniform(1, 6, rng)));
      rot_vars.push_back(tape.constant(rot.back()));
    }
    model::ReachCache reach(g, tape.constant(h));
    for (const auto& chain : graph::enumerate_chain_types(g.num_relations(), corpus.max_len[i], graph::ChainMode::upto_k).types) {
      for (Direction dir : {Direction::trustee, Direction::trustor}) {
        const Tensor fast = model::propagate_chain_type(reach, chain, dir, rot_vars).value();
        worst = std::max(worst, rel_err(fast, per_path(g, chain, dir, h, rot)));
      }
    }
  }
  return bound("max rel error vs per-path evaluation", worst, 1e-9);
}

Outcome reversal_duality(const Options& o, const Corpus& corpus) {
  std::mt19937_64 rng(o.seed + 7);
  double worst = 0.0;
  for (std::size_t i = 0; i < corpus.graphs.size(); i += 4) {
    const TrustGraph& g = corpus.graphs[i];
    const TrustGraph rev = g.reversed();
    const Tensor h = uniform(g.num_nodes(), 4, rng);
    for (const auto& chain : graph::enumerate_chain_types(g.num_relations(), corpus.max_len[i], graph::ChainMode::upto_k).types) {
      const ChainType flipped{{chain.rels.rbegin(), chain.rels.rend()}};
      worst = std::max(worst, rel_err(graph::chain_reach_sum(g, chain, Direction::trustor, h),
                                      graph::chain_reach_sum(rev, flipped, Direction::trustee, h)));
    }
  }
  return bound("max |trustor(G) - trustee(reverse G)|", worst, 1e-12);
}

Outcome enumeration_counts(const Options&) {
  for (std::size_t r = 1; r <= 4; ++r) {
    for (std::size_t k = 1; k <= 3; ++k) {
      std::size_t upto = 0, pow = 1;
      for (std::size_t i = 1; i <= k; ++i) upto += (pow *= r);
      const auto a = graph::enumerate_chain_types(r, k, graph::ChainMode::upto_k);
      const auto b = graph::enumerate_chain_types(r, k, graph::ChainMode::exact_k);
      auto sorted = a.types;
      std::sort(sorted.begin(), sorted.end());
      const bool distinct = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
      if (a.size() != upto || b.size() != pow || !distinct) {
        return {false, "|R|=" + std::to_string(r) + " K=" + std::to_string(k) + ": " + std::to_string(a.size()) +
                           " upto-K, " + std::to_string(b.size()) + " exact-K"};
      }
    }
  }
  return {true, "|R| ≤ 4, K ≤ 3"};
}

Outcome attention_simplex(const Options& o, const Corpus& corpus) {
  double worst = 0.0;
  bool positive = true;
  for (std::size_t i = 0; i < corpus.graphs.size(); i += 10) {
    const TrustGraph& g = corpus.graphs[i];
    model::ModelConfig mc;
    mc.num_nodes = g.num_nodes();
    mc.num_relations = g.num_relations();
    mc.node_attr_dim = 8;
    mc.edge_attr_width = 8;
    mc.dim = 6;
    mc.chains = graph::enumerate_chain_types(g.num_relations(), corpus.max_len[i], graph::ChainMode::upto_k);
    const auto params = model::init_params(mc, o.seed + i);
    nd::Tape tape(false);
    const auto st = model::forward(mc, g, tape, nd::bind_constants(tape, params));
    for (const nd::Var& a : {st.alpha, st.alpha_bar}) {
      double total = 0.0;
      for (double v : a.value().data()) {
        positive = positive && v > 0.0;
        total += v;
      }
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  if (!positive) return {false, "non-positive attention weight"};
  return bound("max |Σα - 1|", worst, 1e-6);
}

Outcome softmax_rows(const Options& o) {
  std::mt19937_64 rng(o.seed + 8);
  const Tensor s = nd::softmax_rows(uniform(20, 9, rng, 500.0));
  double worst = 0.0;
  for (std::size_t r = 0; r < s.rows(); ++r) {
    double total = 0.0;
    for (double v : s.row(r)) total += v;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  if (!s.all_finite()) return {false, "non-finite output on large logits"};
  return bound("max |Σ p - 1|", worst, 1e-12);
}

Outcome micro_f1_accuracy(const Options& o) {
  std::mt19937_64 rng(o.seed + 9);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t r = 2 + rng() % 4;
    eval::EvalRecord rec;
    const std::size_t n = 1 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      rec.truth.push_back(static_cast<graph::RelationId>(rng() % r));
      rec.predicted.push_back(rng() % 3 == 0 ? rec.truth.back() : static_cast<graph::RelationId>(rng() % r));
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += rec.truth[i] == rec.predicted[i];
    worst = std::max(worst, std::abs(eval::compute_metrics(rec, r).micro_f1 - static_cast<double>(hits) / n));
  }
  return bound("max |micro-F1 - accuracy|", worst, 1e-12);
}

Outcome metric_closed_forms(const Options&) {
  const auto perfect = eval::compute_metrics({{0, 1, 2, 3}, {0, 1, 2, 3}}, 4);
  const auto extreme = eval::compute_metrics({{0}, {3}}, 4);
  const auto three = eval::compute_metrics({{0, 1, 2, 3}, {0, 1, 2, 2}}, 4);
  const bool ok = perfect.micro_f1 == 1.0 && perfect.mae == 0.0 && std::abs(extreme.mae - 0.8) <= 1e-12 &&
                  std::abs(three.micro_f1 - 0.75) <= 1e-12;
  return {ok, "perfect f1 " + std::to_string(perfect.micro_f1) + ", master-vs-observer mae " +
                  std::to_string(extreme.mae) + ", 3/4 f1 " + std::to_string(three.micro_f1)};
}

Outcome primitive_gradients(const Options& o) {
  std::mt19937_64 rng(o.seed + 10);
  const TrustGraph g = synthetic::random_graph(7, 15, 2, o.seed + 10);
  nd::ParamStore p = {{"a", uniform(7, 6, rng)}, {"r", uniform(1, 6, rng)}, {"w", uniform(6, 3, rng)},
                      {"b", uniform(1, 3, rng)}};
  const std::vector<std::size_t> labels = {0, 2, 1, 1, 0, 2, 2};
  auto loss = [&](nd::Tape&, const nd::VarMap& v) {
    nd::Var rot = nd::complex_unit_normalize(v.at("r"));
    nd::Var x = nd::complex_hadamard(nd::spmm(g.out_adjacency(1), g.in_adjacency(1), v.at("a")), rot);
    x = nd::add(nd::tanh(x), nd::complex_conjugate(v.at("a")));
    return nd::cross_entropy(nd::add_row(nd::matmul(x, v.at("w")), v.at("b")), labels);
  };
  const auto report = nd::finite_diff_check(loss, p);
  return bound("max rel error, " + std::to_string(report.coords_checked) + " coords", report.max_rel_error, 1e-6);
}

double relu_margin(const model::ModelConfig& mc, const TrustGraph& g, const nd::ParamStore& p) {
  const Tensor z = train::embed(mc, g, p);
  const Tensor& w1 = p.at(model::names::kMlpW1);
  const Tensor& b1 = p.at(model::names::kMlpB1);
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& e : g.edges()) {
    for (std::size_t j = 0; j < w1.cols(); ++j) {
      double pre = b1(0, j);
      for (std::size_t i = 0; i < z.cols(); ++i) pre += z(e.src, i) * w1(i, j) + z(e.dst, i) * w1(i + z.cols(), j);
      margin = std::min(margin, std::abs(pre));
    }
  }
  return margin;
}

Outcome end_to_end_gradient(const Options& o) {
  const TrustGraph g = synthetic::random_graph(10, 24, 4, o.seed + 11);
  double worst = 0.0;
  std::size_t coords = 0;
  for (model::Variant v : {model::Variant::full, model::Variant::trustee_only, model::Variant::trustor_only,
                           model::Variant::uniform_sum}) {
    model::ModelConfig mc;
    mc.num_nodes = 10;
    mc.num_relations = 4;
    mc.node_attr_dim = 6;
    mc.edge_attr_width = 5;
    mc.dim = 4;
    mc.variant = v;
    mc.chains = graph::enumerate_chain_types(4, 2, graph::ChainMode::upto_k);
    // keep every hidden unit away from the relu kink so central differences are smooth
    nd::ParamStore p;
    for (std::uint64_t s = o.seed;; ++s) {
      p = model::init_params(mc, s);
      if (relu_margin(mc, g, p) > 1e-3) break;
    }
    nd::GradCheckOptions opts;
    opts.eps = 1e-5;
    opts.denom_floor = 1e-6;
    const auto report = nd::finite_diff_check(
        [&](nd::Tape& tape, const nd::VarMap& vars) { return model::model_loss(mc, g, g.edges(), tape, vars); }, p,
        opts);
    worst = std::max(worst, report.max_rel_error);
    coords += report.coords_checked;
  }
  return bound("4 variants, " + std::to_string(coords) + " coords, max rel error", worst, 1e-4);
}

Outcome format_roundtrip(const Options& o) {
  for (std::uint64_t t = 0; t < 20; ++t) {
    const TrustGraph g = synthetic::random_graph(12, 30, 4, o.seed + 100 + t);
    const std::string text = graph::format_graph(g);
    graph::LoadOptions opts;
    opts.dense_nodes = g.num_nodes();
    const auto back = graph::parse_graph(text, opts);
    if (back.graph.edges() != g.edges() || graph::format_graph(back.graph) != text)
      return {false, "round trip changed graph " + std::to_string(t)};
  }
  return {true, "20 graphs, byte-identical"};
}

Outcome evaluate_purity(const Options& o) {
  const TrustGraph g = synthetic::random_graph(12, 40, 4, o.seed + 12);
  train::TrainConfig c;
  c.node_attr_dim = 8;
  c.edge_attr_width = 8;
  c.dim = 6;
  auto mc = train::model_config(c, g);
  const auto params = model::init_params(mc, o.seed);
  const auto a = train::evaluate(mc, params, g, g.edges());
  const auto b = train::evaluate(mc, params, g, g.edges());
  const bool same = a.micro_f1 == b.micro_f1 && a.mae == b.mae && a.per_class_f1 == b.per_class_f1;
  return {same, same ? "two evaluations identical" : "evaluations differ"};
}

}  // namespace

std::vector<PropertyResult> run(const Options& options) {
  if (options.graphs == 0 || options.max_nodes < 2 || options.max_chain_length == 0)
    throw UsageError("selfcheck needs at least one graph of two nodes and K ≥ 1");
  const Corpus corpus = make_corpus(options);
  using Check = std::function<Outcome()>;
  const std::vector<std::pair<std::string, Check>> checks = {
      {"rotation.modulus_preservation", [&] { return rotation_modulus(options); }},
      {"rotation.composition_associativity", [&] { return rotation_associativity(options); }},
      {"rotation.inversion_identity", [&] { return rotation_inversion(options); }},
      {"rotation.commutativity", [&] { return rotation_commutativity(options); }},
      {"chains.enumeration_counts", [&] { return enumeration_counts(options); }},
      {"chains.reach_sum_vs_walk_oracle", [&] { return reach_oracle(options, corpus); }},
      {"chains.trustor_reversal_duality", [&] { return reversal_duality(options, corpus); }},
      {"propagation.factorized_vs_per_path", [&] { return propagation_oracle(options, corpus); }},
      {"attention.simplex", [&] { return attention_simplex(options, corpus); }},
      {"softmax.normalization", [&] { return softmax_rows(options); }},
      {"metrics.micro_f1_equals_accuracy", [&] { return micro_f1_accuracy(options); }},
      {"metrics.closed_forms", [&] { return metric_closed_forms(options); }},
      {"gradient.primitives", [&] { return primitive_gradients(options); }},
      {"gradient.end_to_end", [&] { return end_to_end_gradient(options); }},
      {"graph.format_roundtrip", [&] { return format_roundtrip(options); }},
      {"evaluate.purity", [&] { return evaluate_purity(options); }},
  };
  std::vector<PropertyResult> results;
  for (const auto& [name, check] : checks) {
    const auto start = std::chrono::steady_clock::now();
    PropertyResult r{name, false, {}, 0.0};
    try {
      const Outcome out = check();
      r.passed = out.passed;
      r.detail = out.detail;
    } catch (const std::exception& e) {
      r.detail = std::string("threw: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(std::move(r));
  }
  return results;
}

std::string format(const std::vector<PropertyResult>& results) {
  std::ostringstream os;
  std::size_t failed = 0;
  for (const auto& r : results) {
    failed += !r.passed;
    os << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << "\n";
  }
  os << results.size() - failed << "/" << results.size() << " properties passed\n";
  return os.str();
}

}  // namespace trustgnn::selfcheck
