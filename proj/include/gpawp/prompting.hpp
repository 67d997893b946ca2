#pragma once

#include <map>
#include <string>
#include <vector>

#include "gpawp/encoder.hpp"
#include "gpawp/graph.hpp"
#include "gpawp/optim.hpp"

namespace gpawp {

// Trainable vector with the node-embedding dimension, applied elementwise
// before the inner readout.
struct FeaturePrompt {
  std::vector<double> values;

  static FeaturePrompt neutral(std::size_t dim) { return {std::vector<double>(dim, 1.0)}; }
};

// One trainable token per template view, applied as (1 + token) on the view
// readout. Token 0 pairs with the type-erased view.
struct SemanticPrompt {
  std::vector<double> values;

  static SemanticPrompt neutral(std::size_t views) { return {std::vector<double>(views, 0.0)}; }
};

struct LabeledPair {
  int node{};
  int cls{};
};

struct LabeledSet {
  std::vector<LabeledPair> pairs;
  int num_classes{};
};

struct Prototypes {
  std::vector<std::vector<double>> vectors;  // one per class id
};

// Per-node restriction of the h-hop ego ball to every template view.
// Immutable graph side; memoized per node.
class ViewMembership {
 public:
  ViewMembership(const HeteroGraph& g, const SubgraphSet& views, int hops)
      : g_(&g), views_(&views), hops_(hops) {}

  const std::vector<std::vector<int>>& members(int v) const {
    auto it = cache_.find(v);
    if (it != cache_.end()) return it->second;
    auto ego = ego_subgraph(*g_, v, hops_);
    std::vector<std::vector<int>> per_view(views_->count());
    per_view[0] = ego.nodes;
    for (std::size_t i = 1; i < views_->count(); ++i)
      for (int u : ego.nodes)
        if (views_->views[i].contains(u)) per_view[i].push_back(u);
    return cache_.emplace(v, std::move(per_view)).first->second;
  }

  std::size_t view_count() const { return views_->count(); }
  const HeteroGraph& graph() const { return *g_; }
  int hops() const { return hops_; }

 private:
  const HeteroGraph* g_;
  const SubgraphSet* views_;
  int hops_;
  mutable std::map<int, std::vector<std::vector<int>>> cache_;
};

// s_v: inner per-view readout of the feature-prompted embeddings, then the
// (1 + token)-weighted sum over nonempty views. pf_eff / ps_eff are the
// effective prompt vars (masked or compacted upstream when pruning).
inline Var prompted_embedding(Tape& t, const ViewMembership& vm, Var h, Var pf_eff, Var ps_eff,
                              int v) {
  const auto& per_view = vm.members(v);
  bool have_term = false;
  Var acc;
  for (std::size_t i = 0; i < per_view.size(); ++i) {
    if (per_view[i].empty()) continue;  // empty typed views contribute nothing
    Var inner = t.mul(pf_eff, t.sum_rows(h, per_view[i]));
    Var weight = t.add_const(t.index(ps_eff, i), 1.0);
    Var term = t.mul(inner, weight);
    acc = have_term ? t.add(acc, term) : term;
    have_term = true;
  }
  if (!have_term) throw EmptyReadoutError("all template views empty for node " + std::to_string(v));
  return acc;
}

// Per-class mean of prompted support embeddings.
inline std::vector<Var> class_prototypes_on_tape(Tape& t, const ViewMembership& vm, Var h,
                                                 Var pf_eff, Var ps_eff,
                                                 const LabeledSet& support) {
  std::vector<std::vector<Var>> by_class(support.num_classes);
  for (const auto& p : support.pairs) {
    if (p.cls < 0 || p.cls >= support.num_classes)
      throw ContractError("label " + std::to_string(p.cls) + " outside class set");
    by_class[p.cls].push_back(prompted_embedding(t, vm, h, pf_eff, ps_eff, p.node));
  }
  std::vector<Var> protos(support.num_classes);
  for (int c = 0; c < support.num_classes; ++c) {
    if (by_class[c].empty())
      throw MissingClassError("class " + std::to_string(c) + " has no support node");
    Var sum = by_class[c][0];
    for (std::size_t i = 1; i < by_class[c].size(); ++i) sum = t.add(sum, by_class[c][i]);
    protos[c] = t.scale(sum, 1.0 / static_cast<double>(by_class[c].size()));
  }
  return protos;
}

struct DownstreamLossGraph {
  Var total;
  std::vector<Var> per_pair;
};

// Sum over labeled pairs of -ln softmax over per-class similarity logits
// divided by tau; prototypes come from the support set.
inline DownstreamLossGraph downstream_loss_on_tape(Tape& t, const ViewMembership& vm, Var h,
                                                   Var pf_eff, Var ps_eff,
                                                   const LabeledSet& support,
                                                   const LabeledSet& pairs, double tau) {
  if (tau <= 0.0) throw ContractError("temperature must be positive");
  if (pairs.pairs.empty()) throw ContractError("downstream loss over zero labeled pairs");
  auto protos = class_prototypes_on_tape(t, vm, h, pf_eff, ps_eff, support);
  double inv_tau = 1.0 / tau;
  DownstreamLossGraph out;
  bool first = true;
  for (const auto& p : pairs.pairs) {
    if (p.cls < 0 || p.cls >= support.num_classes)
      throw ContractError("label " + std::to_string(p.cls) + " outside class set");
    Var sx = prompted_embedding(t, vm, h, pf_eff, ps_eff, p.node);
    std::vector<Var> logits(protos.size());
    for (std::size_t c = 0; c < protos.size(); ++c)
      logits[c] = t.scale(t.cosine_sim(sx, protos[c]), inv_tau);
    Var nll = t.softmax_nll(t.stack(logits), static_cast<std::size_t>(p.cls));
    out.per_pair.push_back(nll);
    out.total = first ? nll : t.add(out.total, nll);
    first = false;
  }
  return out;
}

// ---- plain-value conveniences (frozen backbone, fixed prompts) ----

inline std::vector<double> prompted_embedding_values(const ViewMembership& vm, const Tensor& h,
                                                     const FeaturePrompt& pf,
                                                     const SemanticPrompt& ps, int v) {
  Tape t;
  Var hv = t.leaf(h);
  Var out = prompted_embedding(t, vm, hv, t.leaf(Tensor::vec(pf.values)),
                               t.leaf(Tensor::vec(ps.values)), v);
  return t.value(out).values;
}

inline Prototypes class_prototypes(const ViewMembership& vm, const Tensor& h,
                                   const FeaturePrompt& pf, const SemanticPrompt& ps,
                                   const LabeledSet& support) {
  Tape t;
  Var hv = t.leaf(h);
  auto protos = class_prototypes_on_tape(t, vm, hv, t.leaf(Tensor::vec(pf.values)),
                                         t.leaf(Tensor::vec(ps.values)), support);
  Prototypes out;
  for (Var p : protos) out.vectors.push_back(t.value(p).values);
  return out;
}

// argmax over cosine similarity; ties go to the lowest class id.
inline int predict(const std::vector<double>& s_x, const Prototypes& protos) {
  if (protos.vectors.empty()) throw ContractError("prediction with no prototypes");
  int best = 0;
  double best_sim = cosine_similarity(s_x, protos.vectors[0]);
  for (std::size_t c = 1; c < protos.vectors.size(); ++c) {
    double sim = cosine_similarity(s_x, protos.vectors[c]);
    if (sim > best_sim) {
      best_sim = sim;
      best = static_cast<int>(c);
    }
  }
  return best;
}

inline double downstream_loss_value(const ViewMembership& vm, const Tensor& h,
                                    const FeaturePrompt& pf, const SemanticPrompt& ps,
                                    const LabeledSet& support, const LabeledSet& pairs,
                                    double tau) {
  Tape t;
  Var hv = t.leaf(h);
  auto lg = downstream_loss_on_tape(t, vm, hv, t.leaf(Tensor::vec(pf.values)),
                                    t.leaf(Tensor::vec(ps.values)), support, pairs, tau);
  return t.value(lg.total).item();
}

// Fraction of `set` whose nearest prototype matches the label.
inline double prompt_accuracy(const ViewMembership& vm, const Tensor& h, const FeaturePrompt& pf,
                              const SemanticPrompt& ps, const LabeledSet& support,
                              const LabeledSet& set) {
  auto protos = class_prototypes(vm, h, pf, ps, support);
  std::size_t hits = 0;
  for (const auto& p : set.pairs) {
    auto sx = prompted_embedding_values(vm, h, pf, ps, p.node);
    if (predict(sx, protos) == p.cls) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(set.pairs.size());
}

struct TuneConfig {
  double tau{0.5};
  std::size_t epochs{100};
  double learning_rate{0.02};
};

struct TuneResult {
  FeaturePrompt pf;
  SemanticPrompt ps;
  std::vector<double> train_curve;     // training loss per update epoch
  std::vector<double> val_curve;       // validation accuracy, epochs 0..N
  std::size_t best_epoch{0};
  double best_val_accuracy{0.0};
  double best_val_loss{0.0};
};

namespace detail {

// Validation selection: best accuracy first, lower validation loss as the
// tie-break. Epoch 0 (the initialization) is always a candidate.
inline bool selection_improves(double acc, double loss, double best_acc, double best_loss) {
  return acc > best_acc || (acc == best_acc && loss < best_loss);
}

}  // namespace detail

// Full prompt tuning: neutral init, gradient descent on the downstream loss
// with the backbone frozen, best-validation prompts returned.
inline TuneResult tune_prompts(const ViewMembership& vm, const Tensor& h,
                               const LabeledSet& support, const LabeledSet& validation,
                               const TuneConfig& cfg) {
  FeaturePrompt pf = FeaturePrompt::neutral(h.shape[1]);
  SemanticPrompt ps = SemanticPrompt::neutral(vm.view_count());

  const LabeledSet& selection_set = validation.pairs.empty() ? support : validation;
  auto selection = [&](const FeaturePrompt& f, const SemanticPrompt& s) {
    return std::make_pair(prompt_accuracy(vm, h, f, s, support, selection_set),
                          downstream_loss_value(vm, h, f, s, support, selection_set, cfg.tau));
  };

  TuneResult result;
  result.pf = pf;
  result.ps = ps;
  std::tie(result.best_val_accuracy, result.best_val_loss) = selection(pf, ps);
  result.val_curve.push_back(result.best_val_accuracy);

  AdamState adam_f(cfg.learning_rate), adam_s(cfg.learning_rate);
  Tensor pf_t = Tensor::vec(pf.values);
  Tensor ps_t = Tensor::vec(ps.values);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape t;
    Var hv = t.leaf(h);
    Var pfv = t.leaf(pf_t, true);
    Var psv = t.leaf(ps_t, true);
    auto lg = downstream_loss_on_tape(t, vm, hv, pfv, psv, support, support, cfg.tau);
    double train_loss = t.value(lg.total).item();
    if (!std::isfinite(train_loss)) throw TrainingError("prompt tuning diverged", epoch);
    result.train_curve.push_back(train_loss);
    t.backward(lg.total);
    adam_f.step(pf_t, t.grad(pfv));
    adam_s.step(ps_t, t.grad(psv));

    FeaturePrompt cf{pf_t.values};
    SemanticPrompt cs{ps_t.values};
    auto [acc, loss] = selection(cf, cs);
    result.val_curve.push_back(acc);
    if (detail::selection_improves(acc, loss, result.best_val_accuracy, result.best_val_loss)) {
      result.best_val_accuracy = acc;
      result.best_val_loss = loss;
      result.best_epoch = epoch + 1;
      result.pf = cf;
      result.ps = cs;
    }
  }
  return result;
}

}  // namespace gpawp
