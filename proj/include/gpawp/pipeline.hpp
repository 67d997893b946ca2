#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpawp/encoder.hpp"
#include "gpawp/graph.hpp"
#include "gpawp/metrics.hpp"
#include "gpawp/pretrain.hpp"
#include "gpawp/prompting.hpp"
#include "gpawp/pruning.hpp"
#include "gpawp/synth.hpp"
#include "gpawp/tasks.hpp"

namespace gpawp {

enum class Variant { Full, WoRep, WoR, WoEp, RandomPruning, PsOnly, PfOnly };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::WoRep: return "wo-rep";
    case Variant::WoR: return "wo-r";
    case Variant::WoEp: return "wo-ep";
    case Variant::RandomPruning: return "random-pruning";
    case Variant::PsOnly: return "ps-only";
    case Variant::PfOnly: return "pf-only";
  }
  return "full";
}

inline Variant parse_variant(const std::string& s) {
  for (Variant v : {Variant::Full, Variant::WoRep, Variant::WoR, Variant::WoEp,
                    Variant::RandomPruning, Variant::PsOnly, Variant::PfOnly})
    if (variant_name(v) == s) return v;
  throw ValidationError("unknown variant '" + s + "'");
}

struct RunConfig {
  std::string graph_path;           // one of graph_path / synth
  std::optional<SynthSpec> synth;
  std::string checkpoint_path;      // empty: pre-train per seed
  Variant variant{Variant::Full};
  std::vector<std::uint64_t> seeds{1};
  int k{1};
  std::size_t n_tasks{5};
  double tau{0.5};
  int hops{1};
  std::size_t hidden_dim{64};
  std::size_t blocks{16};
  double delta{0.6};
  double beta{0.4};
  std::size_t pretrain_epochs{150};
  double pretrain_lr{1e-2};
  std::size_t negatives_per_anchor{1};
  std::size_t tune_epochs{60};
  double tune_lr{0.02};
  std::size_t retune_epochs{0};     // 0: half the tuning budget
  double retune_lr{0.02};
  std::vector<std::size_t> block_sweep;

  std::size_t effective_retune_epochs() const {
    return retune_epochs > 0 ? retune_epochs : tune_epochs / 2;
  }

  void validate() const {
    if (graph_path.empty() == !synth.has_value())
      throw ValidationError("config needs exactly one of graph path or synth spec");
    if (seeds.empty()) throw ValidationError("config needs at least one seed");
    if (k < 1) throw ValidationError("k must be at least 1");
    if (n_tasks == 0) throw ValidationError("n_tasks must be positive");
    if (tau <= 0.0) throw ValidationError("tau must be positive");
    if (synth) synth->validate();
    BlockPartition::make(hidden_dim, blocks);
  }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"variant", variant_name(c.variant)},
                     {"seeds", c.seeds},
                     {"k", c.k},
                     {"n_tasks", c.n_tasks},
                     {"tau", c.tau},
                     {"hops", c.hops},
                     {"hidden_dim", c.hidden_dim},
                     {"blocks", c.blocks},
                     {"delta", c.delta},
                     {"beta", c.beta},
                     {"pretrain_epochs", c.pretrain_epochs},
                     {"pretrain_lr", c.pretrain_lr},
                     {"negatives_per_anchor", c.negatives_per_anchor},
                     {"tune_epochs", c.tune_epochs},
                     {"tune_lr", c.tune_lr},
                     {"retune_epochs", c.retune_epochs},
                     {"retune_lr", c.retune_lr}};
  if (!c.graph_path.empty()) j["graph"] = c.graph_path;
  if (c.synth) j["synth"] = *c.synth;
  if (!c.checkpoint_path.empty()) j["checkpoint"] = c.checkpoint_path;
  if (!c.block_sweep.empty()) j["block_sweep"] = c.block_sweep;
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  RunConfig d;
  c.graph_path = j.value("graph", "");
  if (j.contains("synth")) c.synth = j.at("synth").get<SynthSpec>();
  c.checkpoint_path = j.value("checkpoint", "");
  c.variant = parse_variant(j.value("variant", "full"));
  c.seeds = j.value("seeds", d.seeds);
  c.k = j.value("k", d.k);
  c.n_tasks = j.value("n_tasks", d.n_tasks);
  c.tau = j.value("tau", d.tau);
  c.hops = j.value("hops", d.hops);
  c.hidden_dim = j.value("hidden_dim", d.hidden_dim);
  c.blocks = j.value("blocks", d.blocks);
  c.delta = j.value("delta", d.delta);
  c.beta = j.value("beta", d.beta);
  c.pretrain_epochs = j.value("pretrain_epochs", d.pretrain_epochs);
  c.pretrain_lr = j.value("pretrain_lr", d.pretrain_lr);
  c.negatives_per_anchor = j.value("negatives_per_anchor", d.negatives_per_anchor);
  c.tune_epochs = j.value("tune_epochs", d.tune_epochs);
  c.tune_lr = j.value("tune_lr", d.tune_lr);
  c.retune_epochs = j.value("retune_epochs", d.retune_epochs);
  c.retune_lr = j.value("retune_lr", d.retune_lr);
  c.block_sweep = j.value("block_sweep", d.block_sweep);
}

struct TaskRecord {
  std::uint64_t seed{};
  std::size_t task_index{};
  MetricsRecord metrics;
  std::size_t param_count{};
  bool has_importance{false};
  ImportanceReport importance;
};

struct SeedSummary {
  std::uint64_t seed{};
  double micro_mean{}, micro_std{}, macro_mean{}, macro_std{};
};

struct BlockSweepEntry {
  std::uint64_t seed{};
  std::size_t task_index{};
  std::size_t blocks{};
  std::vector<double> z;
};

struct RunReport {
  nlohmann::json config;
  std::vector<TaskRecord> tasks;
  std::vector<SeedSummary> per_seed;
  double micro_mean{}, micro_std{}, macro_mean{}, macro_std{};
  std::vector<std::string> audit;
  std::vector<BlockSweepEntry> block_sweep;
};

struct PhaseTimings {
  double pretrain_s{}, tune_s{}, prune_s{}, retune_s{}, eval_s{};
};

namespace detail {

struct MeanStd {
  double mean{}, sd{};
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - out.mean) * (x - out.mean);
  out.sd = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

inline std::vector<int> random_keep_mask(std::size_t n, std::size_t keep, std::mt19937_64& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<int> mask(n, 0);
  for (std::size_t i = 0; i < keep && i < n; ++i) mask[idx[i]] = 1;
  return mask;
}

class StopWatch {
 public:
  explicit StopWatch(double* acc) : acc_(acc), start_(std::chrono::steady_clock::now()) {}
  ~StopWatch() {
    if (acc_)
      *acc_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  double* acc_;
  std::chrono::steady_clock::time_point start_;
};

// Reraises pipeline failures with the phase named. Training errors already
// carry their phase in the message; other error kinds keep their exit-code
// class.
template <typename F>
auto with_phase(const char* phase, F&& f) {
  try {
    return f();
  } catch (const TrainingError&) {
    throw;
  } catch (const IoError& e) {
    throw IoError(std::string(phase) + ": " + e.what());
  } catch (const Error& e) {
    throw ValidationError(std::string(phase) + ": " + e.what());
  }
}

}  // namespace detail

// Runs the configured phases for every seed and task. Single-threaded and
// fully deterministic: identical config and seeds reproduce the report
// byte for byte.
inline RunReport run_pipeline(const RunConfig& cfg, PhaseTimings* timings = nullptr) {
  cfg.validate();
  PhaseTimings local;
  PhaseTimings& tm = timings ? *timings : local;

  RunReport report;
  report.config = cfg;

  HeteroGraph loaded;
  if (!cfg.graph_path.empty()) loaded = load_graph(cfg.graph_path);
  GcnParams shared_params;
  bool have_shared_ckpt = !cfg.checkpoint_path.empty();
  if (have_shared_ckpt) shared_params = load_checkpoint(cfg.checkpoint_path);

  auto part = BlockPartition::make(cfg.hidden_dim, cfg.blocks);
  std::vector<double> grand_micro, grand_macro;

  for (std::uint64_t seed : cfg.seeds) {
    const HeteroGraph graph = cfg.synth ? synth_graph(*cfg.synth, seed) : loaded;

    GcnParams params;
    if (have_shared_ckpt) {
      params = shared_params;
    } else {
      detail::StopWatch sw(&tm.pretrain_s);
      PretrainConfig pcfg;
      pcfg.tau = cfg.tau;
      pcfg.epochs = cfg.pretrain_epochs;
      pcfg.learning_rate = cfg.pretrain_lr;
      pcfg.seed = seed;
      pcfg.negatives_per_anchor = cfg.negatives_per_anchor;
      pcfg.hops = cfg.hops;
      pcfg.hidden_dim = cfg.hidden_dim;
      params = detail::with_phase("pretrain", [&] { return run_pretrain(graph, pcfg).best; });
      report.audit.push_back("seed=" + std::to_string(seed) + " pretrain");
    }

    Tensor h = encode(graph, params);
    SubgraphSet views = apply_template(graph);
    ViewMembership vm(graph, views, cfg.hops);
    std::size_t full_params = cfg.hidden_dim + views.count();

    auto tasks = sample_tasks(graph, cfg.k, cfg.n_tasks, seed);
    std::vector<double> seed_micro, seed_macro;

    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
      const TaskSpec& task = tasks[ti];
      std::string ctx = "seed=" + std::to_string(seed) + " task=" + std::to_string(ti) + " ";
      LabeledSet eval_pairs = task.support;
      for (const auto& p : task.validation.pairs) eval_pairs.pairs.push_back(p);

      TuneResult tuned;
      {
        detail::StopWatch sw(&tm.tune_s);
        TuneConfig tcfg{cfg.tau, cfg.tune_epochs, cfg.tune_lr};
        tuned = detail::with_phase(
            "tune", [&] { return tune_prompts(vm, h, task.support, task.validation, tcfg); });
        report.audit.push_back(ctx + "tune");
      }

      TaskRecord rec;
      rec.seed = seed;
      rec.task_index = ti;

      FeaturePrompt final_pf = tuned.pf;
      SemanticPrompt final_ps = tuned.ps;
      rec.param_count = full_params;

      bool wants_prune = cfg.variant == Variant::Full || cfg.variant == Variant::WoR ||
                         cfg.variant == Variant::RandomPruning ||
                         cfg.variant == Variant::PsOnly || cfg.variant == Variant::PfOnly;
      bool wants_retune = cfg.variant == Variant::Full || cfg.variant == Variant::WoEp ||
                          cfg.variant == Variant::RandomPruning ||
                          cfg.variant == Variant::PsOnly || cfg.variant == Variant::PfOnly;

      PrunedPrompts pruned;
      if (wants_prune) {
        detail::StopWatch sw(&tm.prune_s);
        auto [imp, pr] = detail::with_phase("prune", [&] {
          return evaluate_and_prune(vm, h, tuned.pf, tuned.ps, task.support, eval_pairs, cfg.tau,
                                    part, cfg.delta, cfg.beta);
        });
        report.audit.push_back(ctx + "importance");
        MaskState masks = imp.masks;
        if (cfg.variant == Variant::PsOnly) masks.eta.assign(part.blocks, 1);
        if (cfg.variant == Variant::PfOnly) masks.lambda.assign(views.count(), 1);
        if (cfg.variant == Variant::RandomPruning) {
          std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + ti + 1);
          masks.lambda = detail::random_keep_mask(views.count(), imp.masks.kept_tokens(), rng);
          masks.eta = detail::random_keep_mask(part.blocks, imp.masks.kept_blocks(), rng);
        }
        if (masks.lambda != imp.masks.lambda || masks.eta != imp.masks.eta) {
          imp.masks = masks;
          imp.param_count_after = pruned_param_count(masks, part);
          pr = apply_masks(tuned.pf, tuned.ps, masks, part);
        }
        report.audit.push_back(ctx + "prune");
        rec.has_importance = true;
        rec.importance = imp;
        pruned = pr;
        final_pf = pruned.effective_pf();
        final_ps = pruned.effective_ps();
        rec.param_count = pruned.param_count();
      } else if (cfg.variant == Variant::WoEp) {
        MaskState identity{std::vector<int>(views.count(), 1), std::vector<int>(part.blocks, 1)};
        pruned = apply_masks(tuned.pf, tuned.ps, identity, part);
      }

      if (wants_retune) {
        detail::StopWatch sw(&tm.retune_s);
        TuneConfig rcfg{cfg.tau, cfg.effective_retune_epochs(), cfg.retune_lr};
        auto rr = detail::with_phase(
            "retune", [&] { return retune(vm, h, pruned, task.support, task.validation, rcfg); });
        report.audit.push_back(ctx + "retune");
        final_pf = rr.prompts.effective_pf();
        final_ps = rr.prompts.effective_ps();
        rec.param_count = rr.prompts.param_count();
      }

      {
        detail::StopWatch sw(&tm.eval_s);
        rec.metrics = detail::with_phase("eval", [&] {
          auto protos = class_prototypes(vm, h, final_pf, final_ps, task.support);
          std::vector<int> preds, truths;
          for (const auto& q : task.query.pairs) {
            auto sx = prompted_embedding_values(vm, h, final_pf, final_ps, q.node);
            preds.push_back(predict(sx, protos));
            truths.push_back(q.cls);
          }
          return compute_metrics(preds, truths, task.query.num_classes);
        });
        rec.metrics.param_count = rec.param_count;
        report.audit.push_back(ctx + "eval");
      }

      for (std::size_t t_alt : cfg.block_sweep) {
        auto alt_part = BlockPartition::make(cfg.hidden_dim, t_alt);
        auto scores = feature_importance(vm, h, tuned.pf, tuned.ps, task.support, eval_pairs,
                                         cfg.tau, alt_part);
        report.block_sweep.push_back({seed, ti, t_alt, zscore(scores)});
      }

      seed_micro.push_back(rec.metrics.micro_f);
      seed_macro.push_back(rec.metrics.macro_f);
      grand_micro.push_back(rec.metrics.micro_f);
      grand_macro.push_back(rec.metrics.macro_f);
      report.tasks.push_back(std::move(rec));
    }

    auto mi = detail::mean_std(seed_micro);
    auto ma = detail::mean_std(seed_macro);
    report.per_seed.push_back({seed, mi.mean, mi.sd, ma.mean, ma.sd});
  }

  auto mi = detail::mean_std(grand_micro);
  auto ma = detail::mean_std(grand_macro);
  report.micro_mean = mi.mean;
  report.micro_std = mi.sd;
  report.macro_mean = ma.mean;
  report.macro_std = ma.sd;
  return report;
}

// ---- report serialization ----

inline void to_json(nlohmann::json& j, const ImportanceReport& r) {
  j = nlohmann::json{{"raw_semantic", r.raw_semantic},
                     {"raw_feature", r.raw_feature},
                     {"z_semantic", r.z_semantic},
                     {"z_feature", r.z_feature},
                     {"delta", r.delta},
                     {"beta", r.beta},
                     {"lambda", r.masks.lambda},
                     {"eta", r.masks.eta},
                     {"blocks", r.blocks},
                     {"block_size", r.block_size},
                     {"pairs", r.pairs},
                     {"param_count_before", r.param_count_before},
                     {"param_count_after", r.param_count_after}};
  std::vector<int> dim_map, token_map;
  for (std::size_t b = 0; b < r.masks.eta.size(); ++b)
    if (r.masks.eta[b] == 1)
      for (std::size_t k = 0; k < r.block_size; ++k)
        dim_map.push_back(static_cast<int>(b * r.block_size + k));
  for (std::size_t i = 0; i < r.masks.lambda.size(); ++i)
    if (r.masks.lambda[i] == 1) token_map.push_back(static_cast<int>(i));
  j["dim_map"] = dim_map;
  j["token_map"] = token_map;
}

inline void from_json(const nlohmann::json& j, ImportanceReport& r) {
  r.raw_semantic = j.at("raw_semantic").get<std::vector<double>>();
  r.raw_feature = j.at("raw_feature").get<std::vector<double>>();
  r.z_semantic = j.at("z_semantic").get<std::vector<double>>();
  r.z_feature = j.at("z_feature").get<std::vector<double>>();
  r.delta = j.at("delta").get<double>();
  r.beta = j.at("beta").get<double>();
  r.masks.lambda = j.at("lambda").get<std::vector<int>>();
  r.masks.eta = j.at("eta").get<std::vector<int>>();
  r.blocks = j.at("blocks").get<std::size_t>();
  r.block_size = j.at("block_size").get<std::size_t>();
  r.pairs = j.at("pairs").get<std::size_t>();
  r.param_count_before = j.at("param_count_before").get<std::size_t>();
  r.param_count_after = j.at("param_count_after").get<std::size_t>();
}

inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : r.tasks) {
    nlohmann::json jt{{"seed", t.seed},
                      {"task", t.task_index},
                      {"micro_f", t.metrics.micro_f},
                      {"macro_f", t.metrics.macro_f},
                      {"confusion", t.metrics.confusion},
                      {"param_count", t.param_count}};
    if (t.has_importance)
      jt["importance"] = t.importance;
    else
      jt["importance"] = nullptr;
    tasks.push_back(std::move(jt));
  }
  nlohmann::json per_seed = nlohmann::json::array();
  for (const auto& s : r.per_seed)
    per_seed.push_back({{"seed", s.seed},
                        {"micro_mean", s.micro_mean},
                        {"micro_std", s.micro_std},
                        {"macro_mean", s.macro_mean},
                        {"macro_std", s.macro_std}});
  nlohmann::json sweep = nlohmann::json::array();
  for (const auto& b : r.block_sweep)
    sweep.push_back(
        {{"seed", b.seed}, {"task", b.task_index}, {"blocks", b.blocks}, {"z", b.z}});
  return nlohmann::json{{"kind", "gpawp_run_report"},
                        {"config", r.config},
                        {"aggregate",
                         {{"micro_mean", r.micro_mean},
                          {"micro_std", r.micro_std},
                          {"macro_mean", r.macro_mean},
                          {"macro_std", r.macro_std}}},
                        {"per_seed", per_seed},
                        {"tasks", tasks},
                        {"audit", r.audit},
                        {"block_sweep", sweep}};
}

inline RunReport report_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "gpawp_run_report") throw IoError("not a run report");
  RunReport r;
  r.config = j.at("config");
  const auto& agg = j.at("aggregate");
  r.micro_mean = agg.at("micro_mean").get<double>();
  r.micro_std = agg.at("micro_std").get<double>();
  r.macro_mean = agg.at("macro_mean").get<double>();
  r.macro_std = agg.at("macro_std").get<double>();
  for (const auto& s : j.at("per_seed"))
    r.per_seed.push_back({s.at("seed").get<std::uint64_t>(), s.at("micro_mean").get<double>(),
                          s.at("micro_std").get<double>(), s.at("macro_mean").get<double>(),
                          s.at("macro_std").get<double>()});
  for (const auto& t : j.at("tasks")) {
    TaskRecord rec;
    rec.seed = t.at("seed").get<std::uint64_t>();
    rec.task_index = t.at("task").get<std::size_t>();
    rec.metrics.micro_f = t.at("micro_f").get<double>();
    rec.metrics.macro_f = t.at("macro_f").get<double>();
    rec.metrics.confusion = t.at("confusion").get<std::vector<std::vector<int>>>();
    rec.param_count = t.at("param_count").get<std::size_t>();
    rec.metrics.param_count = rec.param_count;
    if (!t.at("importance").is_null()) {
      rec.has_importance = true;
      rec.importance = t.at("importance").get<ImportanceReport>();
    }
    r.tasks.push_back(std::move(rec));
  }
  r.audit = j.at("audit").get<std::vector<std::string>>();
  for (const auto& b : j.at("block_sweep"))
    r.block_sweep.push_back({b.at("seed").get<std::uint64_t>(), b.at("task").get<std::size_t>(),
                             b.at("blocks").get<std::size_t>(),
                             b.at("z").get<std::vector<double>>()});
  return r;
}

namespace detail {

inline std::string num(double v) { return nlohmann::json(v).dump(); }

}  // namespace detail

// Writes report.json plus CSV tables and plot-data files. Wall-clock
// timings go to a separate timings.json so report.json stays reproducible.
inline void emit_report(const RunReport& r, const std::string& out_dir,
                        const PhaseTimings* timings = nullptr) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(out_dir) / name);
    if (!out) throw IoError("cannot write " + (fs::path(out_dir) / name).string());
    return out;
  };

  {
    auto out = open("report.json");
    out << report_to_json(r).dump(2) << '\n';
    if (!out) throw IoError("write failed in " + out_dir);
  }
  {
    auto out = open("summary.csv");
    out << "seed,tasks,micro_mean,micro_std,macro_mean,macro_std\n";
    for (const auto& s : r.per_seed) {
      std::size_t n = 0;
      for (const auto& t : r.tasks)
        if (t.seed == s.seed) ++n;
      out << s.seed << ',' << n << ',' << detail::num(s.micro_mean) << ','
          << detail::num(s.micro_std) << ',' << detail::num(s.macro_mean) << ','
          << detail::num(s.macro_std) << '\n';
    }
    out << "all," << r.tasks.size() << ',' << detail::num(r.micro_mean) << ','
        << detail::num(r.micro_std) << ',' << detail::num(r.macro_mean) << ','
        << detail::num(r.macro_std) << '\n';
  }
  {
    auto out = open("per_task.csv");
    out << "seed,task,micro_f,macro_f,param_count,kept_tokens,kept_blocks\n";
    for (const auto& t : r.tasks) {
      out << t.seed << ',' << t.task_index << ',' << detail::num(t.metrics.micro_f) << ','
          << detail::num(t.metrics.macro_f) << ',' << t.param_count << ',';
      if (t.has_importance)
        out << t.importance.masks.kept_tokens() << ',' << t.importance.masks.kept_blocks();
      else
        out << ',';
      out << '\n';
    }
  }
  {
    auto out = open("importance_scores.csv");
    out << "seed,task,kind,index,raw,z\n";
    for (const auto& t : r.tasks) {
      if (!t.has_importance) continue;
      for (std::size_t i = 0; i < t.importance.raw_semantic.size(); ++i)
        out << t.seed << ',' << t.task_index << ",semantic," << i << ','
            << detail::num(t.importance.raw_semantic[i]) << ','
            << detail::num(t.importance.z_semantic[i]) << '\n';
      for (std::size_t i = 0; i < t.importance.raw_feature.size(); ++i)
        out << t.seed << ',' << t.task_index << ",feature," << i << ','
            << detail::num(t.importance.raw_feature[i]) << ','
            << detail::num(t.importance.z_feature[i]) << '\n';
    }
  }
  {
    auto out = open("shots.csv");
    out << "k,micro_mean,micro_std,macro_mean,macro_std\n";
    out << r.config.value("k", 0) << ',' << detail::num(r.micro_mean) << ','
        << detail::num(r.micro_std) << ',' << detail::num(r.macro_mean) << ','
        << detail::num(r.macro_std) << '\n';
  }
  {
    auto out = open("blocks_grid.csv");
    out << "seed,task,blocks,block,z\n";
    for (const auto& b : r.block_sweep)
      for (std::size_t i = 0; i < b.z.size(); ++i)
        out << b.seed << ',' << b.task_index << ',' << b.blocks << ',' << i << ','
            << detail::num(b.z[i]) << '\n';
  }
  if (timings) {
    auto out = open("timings.json");
    out << nlohmann::json{{"pretrain_s", timings->pretrain_s},
                          {"tune_s", timings->tune_s},
                          {"prune_s", timings->prune_s},
                          {"retune_s", timings->retune_s},
                          {"eval_s", timings->eval_s}}
               .dump(2)
        << '\n';
  }
}

inline RunReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad report " + path + ": " + e.what());
  }
  return report_from_json(j);
}

}  // namespace gpawp
