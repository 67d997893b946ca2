#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "gpawp/promptio.hpp"
#include "gpawp/pruning.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"
#include "support/tasks.hpp"

using gpawp::BlockPartition;
using gpawp::FeaturePrompt;
using gpawp::LabeledSet;
using gpawp::MaskState;
using gpawp::SemanticPrompt;
using gpawp::Tensor;
using gpawp::ViewMembership;

namespace {

// Forward-only oracle: per-pair losses at the given mask values.
std::vector<double> masked_pair_losses(const ViewMembership& vm, const Tensor& h,
                                       const FeaturePrompt& pf, const SemanticPrompt& ps,
                                       const std::vector<double>& lambda,
                                       const std::vector<double>& eta, const BlockPartition& part,
                                       const LabeledSet& support, const LabeledSet& data,
                                       double tau) {
  gpawp::Tape t;
  gpawp::Var hv = t.leaf(h);
  auto mg = gpawp::masked_loss_on_tape(t, vm, hv, pf, ps, lambda, eta, part, support, data, tau);
  std::vector<double> out;
  for (gpawp::Var v : mg.loss.per_pair) out.push_back(t.value(v).item());
  return out;
}

// Central-difference sensitivity of one mask entry, abs per pair then mean.
double fd_sensitivity(const ViewMembership& vm, const Tensor& h, const FeaturePrompt& pf,
                      const SemanticPrompt& ps, const BlockPartition& part,
                      const LabeledSet& support, const LabeledSet& data, double tau,
                      bool semantic, std::size_t index, double eps = 1e-4) {
  std::vector<double> lambda(ps.values.size(), 1.0), eta(part.blocks, 1.0);
  auto& target = semantic ? lambda : eta;
  target[index] = 1.0 + eps;
  auto up = masked_pair_losses(vm, h, pf, ps, lambda, eta, part, support, data, tau);
  target[index] = 1.0 - eps;
  auto down = masked_pair_losses(vm, h, pf, ps, lambda, eta, part, support, data, tau);
  double acc = 0.0;
  for (std::size_t i = 0; i < up.size(); ++i) acc += std::fabs((up[i] - down[i]) / (2.0 * eps));
  return acc / static_cast<double>(up.size());
}

struct TunedFixture {
  builders::PlantedTask task;
  ViewMembership vm;
  FeaturePrompt pf;
  SemanticPrompt ps;
  LabeledSet data;

  explicit TunedFixture(std::uint64_t seed, std::size_t epochs = 30)
      : task(builders::planted_task(seed)), vm(task.g, task.views, 1) {
    gpawp::TuneConfig cfg;
    cfg.epochs = epochs;
    auto tuned = gpawp::tune_prompts(vm, task.h, task.support, task.validation, cfg);
    pf = tuned.pf;
    ps = tuned.ps;
    data = task.support;
    for (const auto& p : task.validation.pairs) data.pairs.push_back(p);
  }
};

}  // namespace

TEST_CASE("zscore examples") {
  auto z = gpawp::zscore({1, 2, 3});
  REQUIRE(z.size() == 3);
  CHECK(z[0] == Catch::Approx(-std::sqrt(1.5)));  // -1.224745
  CHECK(z[1] == Catch::Approx(0.0).margin(1e-12));
  CHECK(z[2] == Catch::Approx(std::sqrt(1.5)));

  CHECK(gpawp::zscore({0.7, 0.7, 0.7}) == std::vector<double>{0, 0, 0});

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> x(8);
    for (double& v : x) v = u(rng);
    auto zs = gpawp::zscore(x);
    double mean = 0.0;
    for (double v : zs) mean += v;
    CHECK(std::fabs(mean / 8.0) < 1e-9);
    CHECK(oracle::population_std(zs) == Catch::Approx(1.0));
  }
}

TEST_CASE("zscore is shift and positive-scale invariant") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> x(10);
  for (double& v : x) v = u(rng);
  auto base = gpawp::zscore(x);

  std::vector<double> moved(10);
  for (std::size_t i = 0; i < 10; ++i) moved[i] = 3.7 * x[i] + 1.9;
  auto z2 = gpawp::zscore(moved);
  for (std::size_t i = 0; i < 10; ++i) CHECK(z2[i] == Catch::Approx(base[i]).margin(1e-9));

  // induced masks are identical
  auto m1 = gpawp::threshold_masks(base, base, 0.4, 0.4);
  auto m2 = gpawp::threshold_masks(z2, z2, 0.4, 0.4);
  CHECK(m1.lambda == m2.lambda);
  CHECK(m1.eta == m2.eta);
}

TEST_CASE("threshold_masks") {
  std::vector<double> z{-1.2247, 0.0, 1.2247};
  auto m = gpawp::threshold_masks(z, z, 0.6, 0.6);
  CHECK(m.lambda == std::vector<int>{0, 0, 1});
  CHECK(m.eta == std::vector<int>{0, 0, 1});

  auto all = gpawp::threshold_masks(z, z, -99.0, -99.0);
  CHECK(all.lambda == std::vector<int>{1, 1, 1});

  // all-zero guard keeps the single best entry
  auto guarded = gpawp::threshold_masks(z, z, 99.0, 99.0);
  CHECK(guarded.lambda == std::vector<int>{0, 0, 1});
  CHECK(guarded.kept_tokens() == 1);

  // raising the cutoff never increases the retained count
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> zs(12);
  for (double& v : zs) v = u(rng);
  std::size_t prev = 99;
  for (double cut : {-3.0, -1.0, -0.3, 0.2, 0.6, 1.4, 3.0}) {
    auto masks = gpawp::threshold_masks(zs, zs, cut, cut);
    CHECK(masks.kept_tokens() <= prev);
    prev = masks.kept_tokens();
  }
}

TEST_CASE("apply_masks compacts and maps") {
  FeaturePrompt pf{{1, 2, 3, 4, 5, 6}};
  SemanticPrompt ps{{0.1, 0.2, 0.3}};
  auto part = BlockPartition::make(6, 3);

  auto identity = gpawp::apply_masks(pf, ps, {{1, 1, 1}, {1, 1, 1}}, part);
  CHECK(identity.pf == pf.values);
  CHECK(identity.ps == ps.values);
  CHECK(identity.dim_map == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK(identity.param_count() == 9);

  auto pruned = gpawp::apply_masks(pf, ps, {{0, 0, 1}, {1, 0, 1}}, part);
  CHECK(pruned.ps == std::vector<double>{0.3});
  CHECK(pruned.token_map == std::vector<int>{2});
  CHECK(pruned.pf == std::vector<double>{1, 2, 5, 6});
  CHECK(pruned.dim_map == std::vector<int>{0, 1, 4, 5});
  CHECK(pruned.param_count() == 5);  // 2*2 blocks + 1 token

  auto eff = pruned.effective_pf();
  CHECK(eff.values == std::vector<double>{1, 2, 0, 0, 5, 6});
  CHECK(pruned.effective_ps().values == std::vector<double>{0, 0, 0.3});
}

TEST_CASE("parameter count formula") {
  auto part = BlockPartition::make(64, 16);
  MaskState masks;
  masks.eta.assign(16, 0);
  masks.eta[0] = masks.eta[5] = masks.eta[9] = 1;
  masks.lambda = {0, 1, 1, 0, 1};
  CHECK(gpawp::pruned_param_count(masks, part) == 4 * 3 + 3);

  // strictly below the unpruned count whenever any entry is zero
  CHECK(gpawp::pruned_param_count(masks, part) < 64 + 5);

  CHECK_THROWS_AS(BlockPartition::make(64, 5), gpawp::PartitionError);
}

TEST_CASE("masked and compacted losses agree exactly") {
  TunedFixture fx(51);
  auto part = BlockPartition::make(8, 4);
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    MaskState masks;
    masks.lambda.assign(3, 0);
    masks.eta.assign(4, 0);
    for (auto& m : masks.lambda) m = rng() % 2;
    for (auto& m : masks.eta) m = rng() % 2;
    if (masks.kept_tokens() == 0) masks.lambda[rng() % 3] = 1;
    if (masks.kept_blocks() == 0) masks.eta[rng() % 4] = 1;

    std::vector<double> lambda(masks.lambda.begin(), masks.lambda.end());
    std::vector<double> eta(masks.eta.begin(), masks.eta.end());
    auto masked = masked_pair_losses(fx.vm, fx.task.h, fx.pf, fx.ps, lambda, eta, part,
                                     fx.task.support, fx.data, 0.5);
    double masked_total = 0.0;
    for (double v : masked) masked_total += v;

    auto pruned = gpawp::apply_masks(fx.pf, fx.ps, masks, part);
    double compacted = gpawp::compacted_loss_value(fx.vm, fx.task.h, pruned, fx.task.support,
                                                   fx.data, 0.5);
    CHECK(std::fabs(masked_total - compacted) <= 1e-12);
  }
}

TEST_CASE("importance scores match finite-difference sensitivities") {
  for (std::uint64_t seed : {61, 67}) {
    TunedFixture fx(seed);
    auto part = BlockPartition::make(8, 4);
    auto [sem, feat] = gpawp::mask_sensitivities(fx.vm, fx.task.h, fx.pf, fx.ps, fx.task.support,
                                                 fx.data, 0.5, part);
    REQUIRE(sem.size() == 3);
    REQUIRE(feat.size() == 4);
    for (std::size_t i = 0; i < sem.size(); ++i) {
      double fd = fd_sensitivity(fx.vm, fx.task.h, fx.pf, fx.ps, part, fx.task.support, fx.data,
                                 0.5, true, i);
      INFO("token " << i << " analytic " << sem[i] << " fd " << fd);
      CHECK(std::fabs(sem[i] - fd) / std::max({std::fabs(fd), std::fabs(sem[i]), 1e-9}) < 1e-3);
    }
    for (std::size_t j = 0; j < feat.size(); ++j) {
      double fd = fd_sensitivity(fx.vm, fx.task.h, fx.pf, fx.ps, part, fx.task.support, fx.data,
                                 0.5, false, j);
      INFO("block " << j << " analytic " << feat[j] << " fd " << fd);
      CHECK(std::fabs(feat[j] - fd) / std::max({std::fabs(fd), std::fabs(feat[j]), 1e-9}) < 1e-3);
    }
  }
}

TEST_CASE("per-dim blocks match finite differences") {
  TunedFixture fx(71);
  auto part = BlockPartition::make(8, 8);  // one dim per block
  auto feat = gpawp::feature_importance(fx.vm, fx.task.h, fx.pf, fx.ps, fx.task.support, fx.data,
                                        0.5, part);
  REQUIRE(feat.size() == 8);
  for (std::size_t j = 0; j < 8; ++j) {
    double fd = fd_sensitivity(fx.vm, fx.task.h, fx.pf, fx.ps, part, fx.task.support, fx.data,
                               0.5, false, j);
    CHECK(std::fabs(feat[j] - fd) / std::max({std::fabs(fd), std::fabs(feat[j]), 1e-9}) < 1e-3);
  }
}

TEST_CASE("token of a never-seen view has zero importance") {
  // type 2 exists but its only node is isolated: no ego ball reaches it
  auto g = builders::make_graph({0, 0, 0, 0, 1, 1, 2},
                                {{0, 1, 0}, {1, 2, 0}, {2, 3, 0}, {0, 4, 1}, {2, 5, 1}}, 2, 3, 2);
  for (int v = 0; v < 4; ++v) g.labels[v] = v % 2;
  g.class_names = {"a", "b"};
  auto views = gpawp::apply_template(g);
  ViewMembership vm(g, views, 1);
  Tensor h = gpawp::encode(g, gpawp::init_gcn_params(2, 2, 3));

  LabeledSet support{{{0, 0}, {1, 1}}, 2};
  LabeledSet data{{{2, 0}, {3, 1}}, 2};
  auto sem = gpawp::semantic_importance(vm, h, FeaturePrompt{{1.1, 0.9}},
                                        SemanticPrompt{{0.1, -0.2, 0.3, 0.4}}, support, data,
                                        0.5);
  REQUIRE(sem.size() == 4);
  CHECK(sem[3] == 0.0);   // view of type 2 never appears
  CHECK(sem[0] > 0.0);
}

TEST_CASE("zero feature-prompt segment has zero block importance") {
  TunedFixture fx(73);
  auto part = BlockPartition::make(8, 4);
  FeaturePrompt pf = fx.pf;
  pf.values[2] = pf.values[3] = 0.0;  // zero out block 1 of 4 (dims 2-3)
  auto feat = gpawp::feature_importance(fx.vm, fx.task.h, pf, fx.ps, fx.task.support, fx.data,
                                        0.5, part);
  CHECK(feat[1] == 0.0);
}

TEST_CASE("duplicating the dataset leaves importance unchanged") {
  TunedFixture fx(79);
  auto part = BlockPartition::make(8, 4);
  auto [sem, feat] = gpawp::mask_sensitivities(fx.vm, fx.task.h, fx.pf, fx.ps, fx.task.support,
                                               fx.data, 0.5, part);
  LabeledSet doubled = fx.data;
  for (const auto& p : fx.data.pairs) doubled.pairs.push_back(p);
  auto [sem2, feat2] = gpawp::mask_sensitivities(fx.vm, fx.task.h, fx.pf, fx.ps, fx.task.support,
                                                 doubled, 0.5, part);
  for (std::size_t i = 0; i < sem.size(); ++i)
    CHECK(sem2[i] == Catch::Approx(sem[i]).epsilon(1e-12));
  for (std::size_t j = 0; j < feat.size(); ++j)
    CHECK(feat2[j] == Catch::Approx(feat[j]).epsilon(1e-12));
}

TEST_CASE("evaluate_and_prune composes and is deterministic") {
  TunedFixture fx(83);
  auto part = BlockPartition::make(8, 4);

  auto [r1, p1] = gpawp::evaluate_and_prune(fx.vm, fx.task.h, fx.pf, fx.ps, fx.task.support,
                                            fx.data, 0.5, part, 0.6, 0.4);
  auto [r2, p2] = gpawp::evaluate_and_prune(fx.vm, fx.task.h, fx.pf, fx.ps, fx.task.support,
                                            fx.data, 0.5, part, 0.6, 0.4);
  CHECK(r1.raw_semantic == r2.raw_semantic);
  CHECK(r1.raw_feature == r2.raw_feature);
  CHECK(r1.masks.lambda == r2.masks.lambda);
  CHECK(r1.masks.eta == r2.masks.eta);
  CHECK(p1.pf == p2.pf);
  CHECK(r1.param_count_after == p1.param_count());
  CHECK(r1.param_count_before == 8 + 3);

  // thresholds below every z-score leave the prompts unchanged
  auto [r3, p3] = gpawp::evaluate_and_prune(fx.vm, fx.task.h, fx.pf, fx.ps, fx.task.support,
                                            fx.data, 0.5, part, -99.0, -99.0);
  CHECK(r3.masks.kept_tokens() == 3);
  CHECK(r3.masks.kept_blocks() == 4);
  CHECK(p3.pf == fx.pf.values);
  CHECK(p3.ps == fx.ps.values);
}

TEST_CASE("all-ones retune equals continued tuning on the unmasked path") {
  TunedFixture fx(89);
  auto part = BlockPartition::make(8, 4);
  auto pruned = gpawp::apply_masks(fx.pf, fx.ps, {{1, 1, 1}, {1, 1, 1, 1}}, part);

  // identity compaction computes the identical loss
  double full = gpawp::downstream_loss_value(fx.vm, fx.task.h, fx.pf, fx.ps, fx.task.support,
                                             fx.data, 0.5);
  double compact = gpawp::compacted_loss_value(fx.vm, fx.task.h, pruned, fx.task.support,
                                               fx.data, 0.5);
  CHECK(full == compact);

  gpawp::TuneConfig cfg;
  cfg.epochs = 10;
  auto rr = gpawp::retune(fx.vm, fx.task.h, pruned, fx.task.support, fx.task.validation, cfg);
  CHECK(rr.prompts.pf.size() == 8);
  CHECK(rr.prompts.ps.size() == 3);
  // selection keeps the initialization as a candidate
  CHECK(rr.best_val_accuracy >=
        gpawp::prompt_accuracy(fx.vm, fx.task.h, fx.pf, fx.ps, fx.task.support,
                               fx.task.validation));
}

TEST_CASE("retune trains only the surviving parameters") {
  TunedFixture fx(97);
  auto part = BlockPartition::make(8, 4);
  MaskState masks{{0, 1, 0}, {1, 0, 1, 0}};
  auto pruned = gpawp::apply_masks(fx.pf, fx.ps, masks, part);
  CHECK(pruned.param_count() == 2 * 2 + 1);

  gpawp::TuneConfig cfg;
  cfg.epochs = 8;
  auto rr = gpawp::retune(fx.vm, fx.task.h, pruned, fx.task.support, fx.task.validation, cfg);
  CHECK(rr.prompts.pf.size() == 4);
  CHECK(rr.prompts.ps.size() == 1);
  CHECK(rr.prompts.dim_map == pruned.dim_map);
  // pruned positions stay hard zero in the effective prompts
  auto eff = rr.prompts.effective_pf();
  CHECK(eff.values[2] == 0.0);
  CHECK(eff.values[3] == 0.0);
  CHECK(rr.prompts.effective_ps().values[0] == 0.0);
}

TEST_CASE("prompt files round-trip exactly") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-2.0, 2.0);

  FeaturePrompt pf{{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)}};
  SemanticPrompt ps{{u(rng), u(rng), u(rng)}};
  auto full_path = (dir / "gpawp_prompts_rt.json").string();
  gpawp::save_prompt_file(full_path, pf, ps, {{"seed", 1}});
  auto loaded = gpawp::load_prompt_file(full_path);
  CHECK_FALSE(loaded.pruned);
  CHECK(loaded.pf.values == pf.values);
  CHECK(loaded.ps.values == ps.values);

  auto part = BlockPartition::make(6, 3);
  auto pruned = gpawp::apply_masks(pf, ps, {{1, 0, 1}, {0, 1, 1}}, part);
  auto pruned_path = (dir / "gpawp_pruned_rt.json").string();
  gpawp::save_pruned_prompt_file(pruned_path, pruned, {{"seed", 1}});
  auto loaded2 = gpawp::load_prompt_file(pruned_path);
  REQUIRE(loaded2.pruned);
  CHECK(loaded2.compact.pf == pruned.pf);
  CHECK(loaded2.compact.ps == pruned.ps);
  CHECK(loaded2.compact.dim_map == pruned.dim_map);
  CHECK(loaded2.compact.token_map == pruned.token_map);
  CHECK(loaded2.compact.masks.lambda == pruned.masks.lambda);
  CHECK(loaded2.effective_pf().values == pruned.effective_pf().values);
  fs::remove(full_path);
  fs::remove(pruned_path);
}
