#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpawp/encoder.hpp"
#include "gpawp/graph.hpp"
#include "gpawp/optim.hpp"

namespace gpawp {

// (v,a) is an edge of the graph, (v,b) is not.
struct Triplet {
  int anchor{};
  int positive{};
  int negative{};
};

struct PretrainConfig {
  double tau{0.5};
  std::size_t epochs{200};
  double learning_rate{1e-2};
  std::uint64_t seed{0};
  std::size_t negatives_per_anchor{1};
  int hops{1};
  std::size_t hidden_dim{64};
};

inline std::vector<Triplet> sample_triplets(const HeteroGraph& g, std::size_t n,
                                            std::uint64_t seed) {
  std::vector<int> eligible;
  for (std::size_t v = 0; v < g.node_count; ++v) {
    std::size_t deg = g.adjacency[v].size();
    if (deg >= 1 && deg + 1 < g.node_count) eligible.push_back(static_cast<int>(v));
  }
  if (g.edges.empty()) throw ContractError("cannot sample triplets from an edgeless graph");
  if (eligible.empty())
    throw ContractError("no negative candidates: every connected node neighbors all others");

  std::mt19937_64 rng(seed);
  std::vector<Triplet> out;
  out.reserve(n);
  std::vector<int> non_neighbors;
  for (std::size_t i = 0; i < n; ++i) {
    int v = eligible[std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng)];
    const auto& nbrs = g.adjacency[v];
    int a = nbrs[std::uniform_int_distribution<std::size_t>(0, nbrs.size() - 1)(rng)];
    non_neighbors.clear();
    std::size_t k = 0;
    for (int u = 0; u < static_cast<int>(g.node_count); ++u) {
      while (k < nbrs.size() && nbrs[k] < u) ++k;
      bool is_nbr = k < nbrs.size() && nbrs[k] == u;
      if (!is_nbr && u != v) non_neighbors.push_back(u);
    }
    int b = non_neighbors[std::uniform_int_distribution<std::size_t>(0, non_neighbors.size() - 1)(
        rng)];
    out.push_back({v, a, b});
  }
  return out;
}

namespace detail {

// Per-node subgraph readout vars, built once per tape.
class SubgraphReadouts {
 public:
  SubgraphReadouts(const HeteroGraph& g, int hops) : g_(&g), hops_(hops) {}

  Var get(Tape& t, Var h, int v) {
    auto it = cache_.find(v);
    if (it != cache_.end()) return it->second;
    Var s = t.sum_rows(h, ego_subgraph(*g_, v, hops_).nodes);
    cache_.emplace(v, s);
    return s;
  }

 private:
  const HeteroGraph* g_;
  int hops_;
  std::map<int, Var> cache_;
};

}  // namespace detail

struct PretrainLossGraph {
  Var total;
  std::vector<std::pair<Var, Var>> sims;  // per triplet: (sim(v,a), sim(v,b)), unscaled
};

// Sum over triplets of -ln( exp(sim(s_v,s_a)/tau) / sum_{u in {a,b}} exp(sim(s_v,s_u)/tau) ).
inline PretrainLossGraph pretrain_loss_on_tape(Tape& t, Var h, const HeteroGraph& g,
                                               const std::vector<Triplet>& triplets, double tau,
                                               int hops) {
  if (triplets.empty()) throw ContractError("pretrain loss over zero triplets");
  if (tau <= 0.0) throw ContractError("temperature must be positive");
  detail::SubgraphReadouts readouts(g, hops);
  PretrainLossGraph out;
  bool first = true;
  double inv_tau = 1.0 / tau;
  for (const Triplet& tri : triplets) {
    Var sv = readouts.get(t, h, tri.anchor);
    Var sa = readouts.get(t, h, tri.positive);
    Var sb = readouts.get(t, h, tri.negative);
    Var sim_a = t.cosine_sim(sv, sa);
    Var sim_b = t.cosine_sim(sv, sb);
    out.sims.emplace_back(sim_a, sim_b);
    Var logits = t.stack({t.scale(sim_a, inv_tau), t.scale(sim_b, inv_tau)});
    Var nll = t.softmax_nll(logits, 0);
    out.total = first ? nll : t.add(out.total, nll);
    first = false;
  }
  return out;
}

// Convenience scalar form over fixed embeddings.
inline double pretrain_loss(const Tensor& embeddings, const HeteroGraph& g,
                            const std::vector<Triplet>& triplets, double tau, int hops) {
  Tape t;
  Var h = t.leaf(embeddings);
  return t.value(pretrain_loss_on_tape(t, h, g, triplets, tau, hops).total).item();
}

struct PretrainResult {
  GcnParams best;
  double best_heldout_loss{0.0};
  double final_heldout_accuracy{0.0};
  nlohmann::json log;  // per-epoch: epoch, train_loss, heldout_loss, heldout_accuracy
};

// Link-prediction pre-training. The checkpoint with the lowest held-out
// triplet loss wins; 10% of the sampled triplets are held out for selection.
inline PretrainResult run_pretrain(const HeteroGraph& g, const PretrainConfig& cfg) {
  GcnParams params = init_gcn_params(g.feature_dim, cfg.hidden_dim, cfg.seed);

  std::size_t eligible = 0;
  for (std::size_t v = 0; v < g.node_count; ++v) {
    std::size_t deg = g.adjacency[v].size();
    if (deg >= 1 && deg + 1 < g.node_count) ++eligible;
  }
  std::size_t n_triplets = std::max<std::size_t>(1, cfg.negatives_per_anchor * eligible);
  auto triplets = sample_triplets(g, n_triplets, cfg.seed);

  std::size_t n_heldout = triplets.size() >= 2 ? std::max<std::size_t>(1, triplets.size() / 10) : 0;
  std::vector<Triplet> train(triplets.begin(), triplets.end() - n_heldout);
  std::vector<Triplet> heldout(triplets.end() - n_heldout, triplets.end());

  Tensor a_hat = normalized_adjacency(g);
  Tensor x = Tensor::matrix(g.node_count, g.feature_dim, g.features);

  auto evaluate = [&](const GcnParams& p, double* acc) {
    Tape t;
    Var h = encode_on_tape(t, t.leaf(a_hat), t.leaf(x), t.leaf(p.w1), t.leaf(p.w2));
    const auto& set = heldout.empty() ? train : heldout;
    auto lg = pretrain_loss_on_tape(t, h, g, set, cfg.tau, cfg.hops);
    if (acc) {
      std::size_t correct = 0;
      for (auto& [sa, sb] : lg.sims)
        if (t.value(sa).item() > t.value(sb).item()) ++correct;
      *acc = static_cast<double>(correct) / static_cast<double>(lg.sims.size());
    }
    return t.value(lg.total).item();
  };

  PretrainResult result{params, 0.0, 0.0, nlohmann::json::array()};
  double acc = 0.0;
  result.best_heldout_loss = evaluate(params, &acc);
  result.final_heldout_accuracy = acc;

  AdamState adam1(cfg.learning_rate), adam2(cfg.learning_rate);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape t;
    Var w1 = t.leaf(params.w1, true);
    Var w2 = t.leaf(params.w2, true);
    Var h = encode_on_tape(t, t.leaf(a_hat), t.leaf(x), w1, w2);
    auto lg = pretrain_loss_on_tape(t, h, g, train, cfg.tau, cfg.hops);
    double train_loss = t.value(lg.total).item();
    if (!std::isfinite(train_loss)) throw TrainingError("pre-training loss diverged", epoch);
    t.backward(lg.total);

    adam1.step(params.w1, t.grad(w1));
    adam2.step(params.w2, t.grad(w2));

    double heldout_loss = evaluate(params, &acc);
    result.log.push_back({{"epoch", epoch},
                          {"train_loss", train_loss},
                          {"heldout_loss", heldout_loss},
                          {"heldout_accuracy", acc}});
    if (heldout_loss < result.best_heldout_loss) {
      result.best_heldout_loss = heldout_loss;
      result.best = params;
    }
    result.final_heldout_accuracy = acc;
  }
  return result;
}

}  // namespace gpawp
