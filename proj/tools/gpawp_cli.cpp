// Command-line driver for the graph prompt pipeline: pre-training, prompt
// tuning, importance-based pruning, retuning, evaluation, full runs, and
// synthetic graph generation.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpawp/pipeline.hpp"
#include "gpawp/promptio.hpp"

namespace {

using nlohmann::json;

gpawp::ViewMembership make_membership(const gpawp::HeteroGraph& g,
                                      const gpawp::SubgraphSet& views, int hops) {
  return gpawp::ViewMembership(g, views, hops);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gpawp::IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw gpawp::IoError("bad JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw gpawp::IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw gpawp::IoError("write failed for " + path);
}

int cmd_pretrain(const std::string& graph_path, const std::string& out,
                 const std::string& log_path, double tau, std::size_t epochs, double lr,
                 std::uint64_t seed, int hops, std::size_t hidden_dim, std::size_t negatives) {
  auto g = gpawp::load_graph(graph_path);
  gpawp::PretrainConfig cfg;
  cfg.tau = tau;
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  cfg.seed = seed;
  cfg.hops = hops;
  cfg.hidden_dim = hidden_dim;
  cfg.negatives_per_anchor = negatives;
  auto result = gpawp::run_pretrain(g, cfg);
  json meta{{"seed", seed},          {"epochs", epochs},
            {"tau", tau},            {"learning_rate", lr},
            {"hops", hops},          {"best_heldout_loss", result.best_heldout_loss},
            {"heldout_accuracy", result.final_heldout_accuracy}};
  gpawp::save_checkpoint(result.best, out, meta);
  if (!log_path.empty()) write_json(log_path, result.log);
  std::cout << "checkpoint " << out << " heldout_loss "
            << result.best_heldout_loss << " heldout_accuracy "
            << result.final_heldout_accuracy << "\n";
  return 0;
}

int cmd_tune(const std::string& graph_path, const std::string& ckpt, const std::string& task_path,
             const std::string& out, double tau, std::size_t epochs, double lr,
             std::uint64_t seed, int hops) {
  auto g = gpawp::load_graph(graph_path);
  auto params = gpawp::load_checkpoint(ckpt);
  auto task = gpawp::load_task(task_path, g);
  auto views = gpawp::apply_template(g);
  auto vm = make_membership(g, views, hops);
  auto h = gpawp::encode(g, params);
  gpawp::TuneConfig cfg{tau, epochs, lr};
  auto result = gpawp::tune_prompts(vm, h, task.support, task.validation, cfg);
  json prov{{"seed", seed},
            {"epochs", epochs},
            {"tau", tau},
            {"learning_rate", lr},
            {"hops", hops},
            {"best_epoch", result.best_epoch},
            {"best_val_accuracy", result.best_val_accuracy},
            {"train_curve", result.train_curve},
            {"val_curve", result.val_curve}};
  gpawp::save_prompt_file(out, result.pf, result.ps, prov);
  std::cout << "prompts " << out << " best_epoch " << result.best_epoch << " val_accuracy "
            << result.best_val_accuracy << "\n";
  return 0;
}

int cmd_prune(const std::string& graph_path, const std::string& ckpt,
              const std::string& prompts_path, const std::string& task_path,
              const std::string& out, const std::string& report_path, double delta, double beta,
              std::size_t blocks, double tau, int hops) {
  auto g = gpawp::load_graph(graph_path);
  auto params = gpawp::load_checkpoint(ckpt);
  auto task = gpawp::load_task(task_path, g);
  auto pf_file = gpawp::load_prompt_file(prompts_path);
  if (pf_file.pruned) throw gpawp::ValidationError("prune expects unpruned prompts");
  auto views = gpawp::apply_template(g);
  auto vm = make_membership(g, views, hops);
  auto h = gpawp::encode(g, params);
  auto part = gpawp::BlockPartition::make(pf_file.pf.values.size(), blocks);

  gpawp::LabeledSet data = task.support;
  for (const auto& p : task.validation.pairs) data.pairs.push_back(p);
  auto [report, pruned] = gpawp::evaluate_and_prune(vm, h, pf_file.pf, pf_file.ps, task.support,
                                                    data, tau, part, delta, beta);
  json jr = report;
  jr["kind"] = "importance_report";
  if (!report_path.empty()) write_json(report_path, jr);
  json prov{{"delta", delta}, {"beta", beta}, {"blocks", blocks},
            {"tau", tau},     {"hops", hops}, {"source_prompts", prompts_path}};
  gpawp::save_pruned_prompt_file(out, pruned, prov);
  std::cout << "pruned " << out << " kept_tokens " << report.masks.kept_tokens()
            << " kept_blocks " << report.masks.kept_blocks() << " params "
            << report.param_count_after << "\n";
  return 0;
}

int cmd_retune(const std::string& graph_path, const std::string& ckpt,
               const std::string& pruned_path, const std::string& task_path,
               const std::string& out, double tau, std::size_t epochs, double lr, int hops) {
  auto g = gpawp::load_graph(graph_path);
  auto params = gpawp::load_checkpoint(ckpt);
  auto task = gpawp::load_task(task_path, g);
  auto pf_file = gpawp::load_prompt_file(pruned_path);
  if (!pf_file.pruned) throw gpawp::ValidationError("retune expects pruned prompts");
  auto views = gpawp::apply_template(g);
  auto vm = make_membership(g, views, hops);
  auto h = gpawp::encode(g, params);
  gpawp::TuneConfig cfg{tau, epochs, lr};
  auto result = gpawp::retune(vm, h, pf_file.compact, task.support, task.validation, cfg);
  json prov = pf_file.provenance;
  prov["retune_epochs"] = epochs;
  prov["retune_best_epoch"] = result.best_epoch;
  prov["retune_val_accuracy"] = result.best_val_accuracy;
  gpawp::save_pruned_prompt_file(out, result.prompts, prov);
  std::cout << "retuned " << out << " best_epoch " << result.best_epoch << " val_accuracy "
            << result.best_val_accuracy << "\n";
  return 0;
}

int cmd_eval(const std::string& graph_path, const std::string& ckpt,
             const std::string& prompts_path, const std::string& task_path,
             const std::string& out, int hops) {
  auto g = gpawp::load_graph(graph_path);
  auto params = gpawp::load_checkpoint(ckpt);
  auto task = gpawp::load_task(task_path, g);
  auto pf_file = gpawp::load_prompt_file(prompts_path);
  auto views = gpawp::apply_template(g);
  auto vm = make_membership(g, views, hops);
  auto h = gpawp::encode(g, params);
  auto pf = pf_file.effective_pf();
  auto ps = pf_file.effective_ps();
  auto protos = gpawp::class_prototypes(vm, h, pf, ps, task.support);
  std::vector<int> preds, truths;
  for (const auto& q : task.query.pairs) {
    auto sx = gpawp::prompted_embedding_values(vm, h, pf, ps, q.node);
    preds.push_back(gpawp::predict(sx, protos));
    truths.push_back(q.cls);
  }
  auto metrics = gpawp::compute_metrics(preds, truths, task.query.num_classes);
  json jm{{"micro_f", metrics.micro_f},
          {"macro_f", metrics.macro_f},
          {"confusion", metrics.confusion},
          {"param_count", pf_file.param_count()},
          {"query_size", truths.size()}};
  if (!out.empty()) write_json(out, jm);
  std::cout << "micro_f " << metrics.micro_f << " macro_f " << metrics.macro_f << " params "
            << pf_file.param_count() << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  gpawp::RunConfig cfg = read_json(config_path).get<gpawp::RunConfig>();
  gpawp::PhaseTimings timings;
  auto report = gpawp::run_pipeline(cfg, &timings);
  gpawp::emit_report(report, out_dir, &timings);
  std::cout << "report " << out_dir << "/report.json micro_f " << report.micro_mean << " +- "
            << report.micro_std << " macro_f " << report.macro_mean << " +- "
            << report.macro_std << "\n";
  return 0;
}

int cmd_synth(const std::string& spec_path, std::uint64_t seed, const std::string& out) {
  gpawp::SynthSpec spec;
  if (!spec_path.empty()) spec = read_json(spec_path).get<gpawp::SynthSpec>();
  auto g = gpawp::synth_graph(spec, seed);
  gpawp::save_graph(g, out);
  std::cout << "graph " << out << " nodes " << g.node_count << " edges " << g.edges.size()
            << " types " << g.num_types() << "\n";
  return 0;
}

int cmd_tasks(const std::string& graph_path, int k, std::size_t n_tasks, std::uint64_t seed,
              const std::string& out_prefix) {
  auto g = gpawp::load_graph(graph_path);
  auto tasks = gpawp::sample_tasks(g, k, n_tasks, seed);
  for (std::size_t i = 0; i < tasks.size(); ++i)
    gpawp::save_task(out_prefix + std::to_string(i) + ".json", tasks[i], g.class_names);
  std::cout << "tasks " << tasks.size() << " prefix " << out_prefix << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph prompt tuning with importance-based weight pruning"};
  app.require_subcommand(1);

  std::string graph, ckpt, task, prompts, pruned, out, report, log, config, spec;
  double tau = 0.5, lr = 0.0, delta = 0.6, beta = 0.4;
  std::size_t epochs = 0, hidden_dim = 64, blocks = 16, negatives = 1, n_tasks = 1;
  std::uint64_t seed = 1;
  int hops = 1, k = 1;

  auto* p = app.add_subcommand("pretrain", "link-prediction pre-training");
  p->add_option("--graph", graph)->required();
  p->add_option("--out", out)->required();
  p->add_option("--log", log);
  p->add_option("--tau", tau);
  p->add_option("--epochs", epochs)->default_val(200);
  p->add_option("--lr", lr)->default_val(1e-2);
  p->add_option("--seed", seed);
  p->add_option("--hops", hops);
  p->add_option("--hidden-dim", hidden_dim);
  p->add_option("--negatives", negatives);

  auto* t = app.add_subcommand("tune", "full prompt tuning on a k-shot task");
  t->add_option("--graph", graph)->required();
  t->add_option("--ckpt", ckpt)->required();
  t->add_option("--task", task)->required();
  t->add_option("--out", out)->required();
  t->add_option("--tau", tau);
  t->add_option("--epochs", epochs)->default_val(60);
  t->add_option("--lr", lr)->default_val(0.02);
  t->add_option("--seed", seed);
  t->add_option("--hops", hops);

  auto* pr = app.add_subcommand("prune", "importance evaluation and threshold pruning");
  pr->add_option("--graph", graph)->required();
  pr->add_option("--ckpt", ckpt)->required();
  pr->add_option("--prompts", prompts)->required();
  pr->add_option("--task", task)->required();
  pr->add_option("--out", out)->required();
  pr->add_option("--report", report);
  pr->add_option("--delta", delta);
  pr->add_option("--beta", beta);
  pr->add_option("--blocks", blocks);
  pr->add_option("--tau", tau);
  pr->add_option("--hops", hops);

  auto* rt = app.add_subcommand("retune", "retune the surviving pruned prompts");
  rt->add_option("--graph", graph)->required();
  rt->add_option("--ckpt", ckpt)->required();
  rt->add_option("--pruned", pruned)->required();
  rt->add_option("--task", task)->required();
  rt->add_option("--out", out)->required();
  rt->add_option("--tau", tau);
  rt->add_option("--epochs", epochs)->default_val(30);
  rt->add_option("--lr", lr)->default_val(0.02);
  rt->add_option("--hops", hops);

  auto* ev = app.add_subcommand("eval", "predict the query set and report metrics");
  ev->add_option("--graph", graph)->required();
  ev->add_option("--ckpt", ckpt)->required();
  ev->add_option("--prompts", prompts)->required();
  ev->add_option("--task", task)->required();
  ev->add_option("--out", out);
  ev->add_option("--hops", hops);

  auto* rn = app.add_subcommand("run", "config-driven end-to-end run");
  rn->add_option("--config", config)->required();
  rn->add_option("--out", out)->required();

  auto* sy = app.add_subcommand("synth", "generate a planted-partition graph");
  sy->add_option("--spec", spec);
  sy->add_option("--seed", seed);
  sy->add_option("--out", out)->required();

  auto* tk = app.add_subcommand("tasks", "sample k-shot task files from a labeled graph");
  tk->add_option("--graph", graph)->required();
  tk->add_option("--k", k);
  tk->add_option("--n", n_tasks);
  tk->add_option("--seed", seed);
  tk->add_option("--out-prefix", out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(p))
      return cmd_pretrain(graph, out, log, tau, epochs, lr, seed, hops, hidden_dim, negatives);
    if (app.got_subcommand(t)) return cmd_tune(graph, ckpt, task, out, tau, epochs, lr, seed, hops);
    if (app.got_subcommand(pr))
      return cmd_prune(graph, ckpt, prompts, task, out, report, delta, beta, blocks, tau, hops);
    if (app.got_subcommand(rt))
      return cmd_retune(graph, ckpt, pruned, task, out, tau, epochs, lr, hops);
    if (app.got_subcommand(ev)) return cmd_eval(graph, ckpt, prompts, task, out, hops);
    if (app.got_subcommand(rn)) return cmd_run(config, out);
    if (app.got_subcommand(sy)) return cmd_synth(spec, seed, out);
    if (app.got_subcommand(tk)) return cmd_tasks(graph, k, n_tasks, seed, out);
  } catch (const gpawp::TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 3;
  } catch (const gpawp::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const gpawp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
