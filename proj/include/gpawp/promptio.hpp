#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "gpawp/graph.hpp"
#include "gpawp/pruning.hpp"
#include "gpawp/tasks.hpp"

namespace gpawp {

// On-disk prompt bundle; either full prompts or a compacted pruned set with
// its dim/token maps.
struct PromptFile {
  bool pruned{false};
  std::size_t hidden_dim{};
  std::size_t views{};
  FeaturePrompt pf;       // full-length when !pruned
  SemanticPrompt ps;
  PrunedPrompts compact;  // populated when pruned
  nlohmann::json provenance;

  FeaturePrompt effective_pf() const { return pruned ? compact.effective_pf() : pf; }
  SemanticPrompt effective_ps() const { return pruned ? compact.effective_ps() : ps; }
  std::size_t param_count() const {
    return pruned ? compact.param_count() : pf.values.size() + ps.values.size();
  }
};

inline void save_prompt_file(const std::string& path, const FeaturePrompt& pf,
                             const SemanticPrompt& ps, const nlohmann::json& provenance) {
  nlohmann::json j{{"kind", "prompts"},
                   {"hidden_dim", pf.values.size()},
                   {"views", ps.values.size()},
                   {"pf", pf.values},
                   {"ps", ps.values},
                   {"provenance", provenance}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write prompts " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

inline void save_pruned_prompt_file(const std::string& path, const PrunedPrompts& p,
                                    const nlohmann::json& provenance) {
  nlohmann::json j{{"kind", "pruned_prompts"},
                   {"hidden_dim", p.hidden_dim},
                   {"views", p.views},
                   {"pf", p.pf},
                   {"ps", p.ps},
                   {"dim_map", p.dim_map},
                   {"token_map", p.token_map},
                   {"lambda", p.masks.lambda},
                   {"eta", p.masks.eta},
                   {"blocks", p.partition.blocks},
                   {"block_size", p.partition.block_size},
                   {"param_count", p.param_count()},
                   {"provenance", provenance}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write pruned prompts " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

inline PromptFile load_prompt_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prompts " + path);
  nlohmann::json j;
  try {
    in >> j;
    PromptFile f;
    std::string kind = j.at("kind").get<std::string>();
    f.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    f.views = j.at("views").get<std::size_t>();
    f.provenance = j.value("provenance", nlohmann::json::object());
    if (kind == "prompts") {
      f.pf.values = j.at("pf").get<std::vector<double>>();
      f.ps.values = j.at("ps").get<std::vector<double>>();
    } else if (kind == "pruned_prompts") {
      f.pruned = true;
      f.compact.pf = j.at("pf").get<std::vector<double>>();
      f.compact.ps = j.at("ps").get<std::vector<double>>();
      f.compact.dim_map = j.at("dim_map").get<std::vector<int>>();
      f.compact.token_map = j.at("token_map").get<std::vector<int>>();
      f.compact.masks.lambda = j.at("lambda").get<std::vector<int>>();
      f.compact.masks.eta = j.at("eta").get<std::vector<int>>();
      f.compact.partition.blocks = j.at("blocks").get<std::size_t>();
      f.compact.partition.block_size = j.at("block_size").get<std::size_t>();
      f.compact.hidden_dim = f.hidden_dim;
      f.compact.views = f.views;
    } else {
      throw IoError("not a prompt file: " + path);
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad prompt file " + path + ": " + e.what());
  }
}

inline void save_task(const std::string& path, const TaskSpec& task,
                      const std::vector<std::string>& class_names) {
  auto pairs_json = [&](const LabeledSet& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : s.pairs) arr.push_back({p.node, class_names[p.cls]});
    return arr;
  };
  nlohmann::json j{{"kind", "task"},
                   {"k", task.k},
                   {"seed", task.seed},
                   {"classes", class_names},
                   {"support", pairs_json(task.support)},
                   {"validation", pairs_json(task.validation)},
                   {"query", pairs_json(task.query)}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write task " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

inline TaskSpec load_task(const std::string& path, const HeteroGraph& g) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open task " + path);
  nlohmann::json j;
  try {
    in >> j;
    if (j.value("kind", "") != "task") throw IoError("not a task file: " + path);
    auto classes = j.at("classes").get<std::vector<std::string>>();
    auto cls_id = [&](const std::string& name) {
      for (std::size_t c = 0; c < classes.size(); ++c)
        if (classes[c] == name) return static_cast<int>(c);
      throw ValidationError("task label '" + name + "' not in class set");
    };
    auto read_pairs = [&](const char* key) {
      LabeledSet s;
      s.num_classes = static_cast<int>(classes.size());
      for (const auto& p : j.at(key)) {
        int node = p.at(0).get<int>();
        if (node < 0 || static_cast<std::size_t>(node) >= g.node_count)
          throw ValidationError("task node " + std::to_string(node) + " outside graph");
        if (g.node_types[node] != g.target_type)
          throw ValidationError("task node " + std::to_string(node) +
                                " is not of the target type");
        s.pairs.push_back({node, cls_id(p.at(1).get<std::string>())});
      }
      return s;
    };
    TaskSpec task;
    task.k = j.at("k").get<int>();
    task.seed = j.value("seed", 0);
    task.support = read_pairs("support");
    task.validation = read_pairs("validation");
    task.query = read_pairs("query");
    return task;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad task file " + path + ": " + e.what());
  }
}

}  // namespace gpawp
