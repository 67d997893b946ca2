#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gpawp/prompting.hpp"

namespace gpawp {

// Equal split of the feature-prompt dimensions into t contiguous blocks.
struct BlockPartition {
  std::size_t blocks{};
  std::size_t block_size{};

  static BlockPartition make(std::size_t hidden_dim, std::size_t t) {
    if (t == 0 || hidden_dim % t != 0)
      throw PartitionError("block count " + std::to_string(t) + " does not divide hidden dim " +
                           std::to_string(hidden_dim));
    return {t, hidden_dim / t};
  }

  std::size_t dims() const { return blocks * block_size; }
};

// Binary keep/prune masks: lambda over semantic tokens, eta over feature
// blocks. A zero entry means the unit is pruned.
struct MaskState {
  std::vector<int> lambda;
  std::vector<int> eta;

  std::size_t kept_tokens() const { return std::count(lambda.begin(), lambda.end(), 1); }
  std::size_t kept_blocks() const { return std::count(eta.begin(), eta.end(), 1); }
};

inline std::size_t pruned_param_count(const MaskState& masks, const BlockPartition& part) {
  return part.block_size * masks.kept_blocks() + masks.kept_tokens();
}

// Prompts with pruned entries physically removed. dim_map/token_map list the
// surviving original positions; pruned feature dims read as hard zeros and
// pruned semantic tokens fall back to the neutral view weight.
struct PrunedPrompts {
  std::vector<double> pf;     // surviving feature-prompt dims
  std::vector<double> ps;     // surviving semantic tokens
  std::vector<int> dim_map;   // original dim per surviving pf entry
  std::vector<int> token_map; // original token per surviving ps entry
  std::size_t hidden_dim{};
  std::size_t views{};
  BlockPartition partition{};
  MaskState masks;

  std::size_t param_count() const { return pf.size() + ps.size(); }

  FeaturePrompt effective_pf() const {
    FeaturePrompt full{std::vector<double>(hidden_dim, 0.0)};
    for (std::size_t i = 0; i < dim_map.size(); ++i) full.values[dim_map[i]] = pf[i];
    return full;
  }
  SemanticPrompt effective_ps() const {
    SemanticPrompt full{std::vector<double>(views, 0.0)};
    for (std::size_t i = 0; i < token_map.size(); ++i) full.values[token_map[i]] = ps[i];
    return full;
  }
};

// Loss with mask variables inserted per the masked-prompt forms: the
// semantic tokens become lambda_i * p_s^i and the feature prompt is
// multiplied blockwise by eta. Evaluated at all-ones masks this equals the
// unmasked loss, and the mask gradients are the sensitivity scores.
struct MaskedLossGraph {
  Var lambda;
  Var eta;
  DownstreamLossGraph loss;
};

inline MaskedLossGraph masked_loss_on_tape(Tape& t, const ViewMembership& vm, Var h,
                                           const FeaturePrompt& pf, const SemanticPrompt& ps,
                                           const std::vector<double>& lambda,
                                           const std::vector<double>& eta,
                                           const BlockPartition& part, const LabeledSet& support,
                                           const LabeledSet& pairs, double tau) {
  if (part.dims() != pf.values.size())
    throw PartitionError("partition covers " + std::to_string(part.dims()) +
                         " dims but feature prompt has " + std::to_string(pf.values.size()));
  MaskedLossGraph out;
  out.lambda = t.leaf(Tensor::vec(lambda), true);
  out.eta = t.leaf(Tensor::vec(eta), true);
  Var pf_eff = t.mul(t.expand_blocks(out.eta, part.block_size), t.leaf(Tensor::vec(pf.values)));
  Var ps_eff = t.mul(out.lambda, t.leaf(Tensor::vec(ps.values)));
  out.loss = downstream_loss_on_tape(t, vm, h, pf_eff, ps_eff, support, pairs, tau);
  return out;
}

// Mean absolute per-pair gradient of the downstream loss with respect to
// each mask variable, evaluated at all-ones masks. First result is over
// semantic tokens, second over feature blocks.
inline std::pair<std::vector<double>, std::vector<double>> mask_sensitivities(
    const ViewMembership& vm, const Tensor& h, const FeaturePrompt& pf, const SemanticPrompt& ps,
    const LabeledSet& support, const LabeledSet& data, double tau, const BlockPartition& part) {
  if (data.pairs.empty()) throw ContractError("importance evaluation over zero labeled pairs");
  std::vector<double> ones_l(ps.values.size(), 1.0), ones_e(part.blocks, 1.0);
  Tape t;
  Var hv = t.leaf(h);
  auto mg = masked_loss_on_tape(t, vm, hv, pf, ps, ones_l, ones_e, part, support, data, tau);

  std::vector<double> sem(ps.values.size(), 0.0), feat(part.blocks, 0.0);
  for (Var pair_loss : mg.loss.per_pair) {
    t.backward(pair_loss);
    Tensor gl = t.grad(mg.lambda);
    Tensor ge = t.grad(mg.eta);
    for (std::size_t i = 0; i < sem.size(); ++i) sem[i] += std::fabs(gl.values[i]);
    for (std::size_t j = 0; j < feat.size(); ++j) feat[j] += std::fabs(ge.values[j]);
  }
  double n = static_cast<double>(mg.loss.per_pair.size());
  for (double& v : sem) v /= n;
  for (double& v : feat) v /= n;
  return {std::move(sem), std::move(feat)};
}

inline std::vector<double> semantic_importance(const ViewMembership& vm, const Tensor& h,
                                               const FeaturePrompt& pf, const SemanticPrompt& ps,
                                               const LabeledSet& support, const LabeledSet& data,
                                               double tau) {
  auto part = BlockPartition::make(pf.values.size(), pf.values.size());
  return mask_sensitivities(vm, h, pf, ps, support, data, tau, part).first;
}

inline std::vector<double> feature_importance(const ViewMembership& vm, const Tensor& h,
                                              const FeaturePrompt& pf, const SemanticPrompt& ps,
                                              const LabeledSet& support, const LabeledSet& data,
                                              double tau, const BlockPartition& part) {
  return mask_sensitivities(vm, h, pf, ps, support, data, tau, part).second;
}

// (x - mean) / population std; an (almost) constant vector maps to zeros.
inline std::vector<double> zscore(const std::vector<double>& scores) {
  if (scores.empty()) throw ContractError("zscore of an empty vector");
  double mean = 0.0;
  for (double v : scores) mean += v;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double v : scores) var += (v - mean) * (v - mean);
  double sd = std::sqrt(var / static_cast<double>(scores.size()));
  std::vector<double> out(scores.size(), 0.0);
  if (sd < 1e-12) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - mean) / sd;
  return out;
}

namespace detail {

inline std::vector<int> threshold_one(const std::vector<double>& z, double cutoff) {
  std::vector<int> mask(z.size(), 0);
  bool any = false;
  for (std::size_t i = 0; i < z.size(); ++i) {
    mask[i] = z[i] >= cutoff ? 1 : 0;
    any = any || mask[i] == 1;
  }
  if (!any) {
    // keep the pipeline total: retain the single highest-scoring entry
    std::size_t best = 0;
    for (std::size_t i = 1; i < z.size(); ++i)
      if (z[i] > z[best]) best = i;
    mask[best] = 1;
  }
  return mask;
}

}  // namespace detail

inline MaskState threshold_masks(const std::vector<double>& z_semantic,
                                 const std::vector<double>& z_feature, double delta, double beta) {
  return {detail::threshold_one(z_semantic, delta), detail::threshold_one(z_feature, beta)};
}

inline PrunedPrompts apply_masks(const FeaturePrompt& pf, const SemanticPrompt& ps,
                                 const MaskState& masks, const BlockPartition& part) {
  if (masks.eta.size() != part.blocks || part.dims() != pf.values.size() ||
      masks.lambda.size() != ps.values.size())
    throw ContractError("mask sizes do not match prompt sizes");
  PrunedPrompts out;
  out.hidden_dim = pf.values.size();
  out.views = ps.values.size();
  out.partition = part;
  out.masks = masks;
  for (std::size_t b = 0; b < part.blocks; ++b)
    if (masks.eta[b] == 1)
      for (std::size_t k = 0; k < part.block_size; ++k) {
        std::size_t dim = b * part.block_size + k;
        out.dim_map.push_back(static_cast<int>(dim));
        out.pf.push_back(pf.values[dim]);
      }
  for (std::size_t i = 0; i < ps.values.size(); ++i)
    if (masks.lambda[i] == 1) {
      out.token_map.push_back(static_cast<int>(i));
      out.ps.push_back(ps.values[i]);
    }
  return out;
}

// Loss of the compacted prompts: surviving entries are scattered back to
// their original positions (zeros elsewhere), which reproduces the masked
// arithmetic exactly.
inline DownstreamLossGraph compacted_loss_on_tape(Tape& t, const ViewMembership& vm, Var h,
                                                  Var pf_compact, Var ps_compact,
                                                  const PrunedPrompts& pruned,
                                                  const LabeledSet& support,
                                                  const LabeledSet& pairs, double tau) {
  Var pf_eff = t.scatter(pf_compact, pruned.dim_map, pruned.hidden_dim);
  Var ps_eff = t.scatter(ps_compact, pruned.token_map, pruned.views);
  return downstream_loss_on_tape(t, vm, h, pf_eff, ps_eff, support, pairs, tau);
}

inline double compacted_loss_value(const ViewMembership& vm, const Tensor& h,
                                   const PrunedPrompts& pruned, const LabeledSet& support,
                                   const LabeledSet& pairs, double tau) {
  Tape t;
  Var hv = t.leaf(h);
  auto lg = compacted_loss_on_tape(t, vm, hv, t.leaf(Tensor::vec(pruned.pf)),
                                   t.leaf(Tensor::vec(pruned.ps)), pruned, support, pairs, tau);
  return t.value(lg.total).item();
}

struct ImportanceReport {
  std::vector<double> raw_semantic, raw_feature;
  std::vector<double> z_semantic, z_feature;
  double delta{}, beta{};
  MaskState masks;
  std::size_t blocks{}, block_size{};
  std::size_t pairs{};
  std::size_t param_count_before{}, param_count_after{};
};

// Alg. 2: score, normalize, threshold, compact.
inline std::pair<ImportanceReport, PrunedPrompts> evaluate_and_prune(
    const ViewMembership& vm, const Tensor& h, const FeaturePrompt& pf, const SemanticPrompt& ps,
    const LabeledSet& support, const LabeledSet& data, double tau, const BlockPartition& part,
    double delta, double beta) {
  auto [raw_s, raw_f] = mask_sensitivities(vm, h, pf, ps, support, data, tau, part);
  ImportanceReport report;
  report.raw_semantic = raw_s;
  report.raw_feature = raw_f;
  report.z_semantic = zscore(raw_s);
  report.z_feature = zscore(raw_f);
  report.delta = delta;
  report.beta = beta;
  report.masks = threshold_masks(report.z_semantic, report.z_feature, delta, beta);
  report.blocks = part.blocks;
  report.block_size = part.block_size;
  report.pairs = data.pairs.size();
  report.param_count_before = pf.values.size() + ps.values.size();
  report.param_count_after = pruned_param_count(report.masks, part);
  PrunedPrompts pruned = apply_masks(pf, ps, report.masks, part);
  return {std::move(report), std::move(pruned)};
}

struct RetuneResult {
  PrunedPrompts prompts;
  std::vector<double> train_curve;
  std::vector<double> val_curve;
  std::size_t best_epoch{0};
  double best_val_accuracy{0.0};
  double best_val_loss{0.0};
};

// Retuning: same optimization loop as prompt tuning, but over the surviving
// prompt entries only, initialized from their pruned values. The pruned
// initialization is itself a selection candidate and is replaced only on a
// strict validation-accuracy improvement: the prompts are already trained,
// so retuning keeps the earliest best state rather than chasing ties.
inline RetuneResult retune(const ViewMembership& vm, const Tensor& h, const PrunedPrompts& pruned,
                           const LabeledSet& support, const LabeledSet& validation,
                           const TuneConfig& cfg) {
  const LabeledSet& selection_set = validation.pairs.empty() ? support : validation;
  auto selection_acc = [&](const PrunedPrompts& p) {
    return prompt_accuracy(vm, h, p.effective_pf(), p.effective_ps(), support, selection_set);
  };

  RetuneResult result;
  result.prompts = pruned;
  result.best_val_accuracy = selection_acc(pruned);
  result.val_curve.push_back(result.best_val_accuracy);

  AdamState adam_f(cfg.learning_rate), adam_s(cfg.learning_rate);
  PrunedPrompts current = pruned;
  Tensor pf_t = Tensor::vec(current.pf);
  Tensor ps_t = Tensor::vec(current.ps);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape t;
    Var hv = t.leaf(h);
    Var pfv = t.leaf(pf_t, true);
    Var psv = t.leaf(ps_t, true);
    auto lg = compacted_loss_on_tape(t, vm, hv, pfv, psv, current, support, support, cfg.tau);
    double train_loss = t.value(lg.total).item();
    if (!std::isfinite(train_loss)) throw TrainingError("retuning diverged", epoch);
    result.train_curve.push_back(train_loss);
    t.backward(lg.total);
    adam_f.step(pf_t, t.grad(pfv));
    adam_s.step(ps_t, t.grad(psv));

    current.pf = pf_t.values;
    current.ps = ps_t.values;
    double acc = selection_acc(current);
    result.val_curve.push_back(acc);
    if (acc > result.best_val_accuracy) {
      result.best_val_accuracy = acc;
      result.best_epoch = epoch + 1;
      result.prompts = current;
    }
  }
  return result;
}

}  // namespace gpawp
