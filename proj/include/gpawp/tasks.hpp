#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "gpawp/graph.hpp"
#include "gpawp/prompting.hpp"

namespace gpawp {

// One k-shot episode: k labeled support nodes per class, a mirrored
// validation split, and every remaining labeled target node as query.
struct TaskSpec {
  int k{};
  LabeledSet support, validation, query;
  std::uint64_t seed{};
};

inline std::vector<TaskSpec> sample_tasks(const HeteroGraph& g, int k, std::size_t n_tasks,
                                          std::uint64_t seed) {
  if (k < 1) throw TaskError("shot count must be at least 1");
  int num_classes = static_cast<int>(g.num_classes());
  if (num_classes < 2) throw TaskError("need at least two labeled classes");

  std::vector<std::vector<int>> by_class(num_classes);
  for (std::size_t v = 0; v < g.node_count; ++v)
    if (g.labels[v] >= 0 && g.node_types[v] == g.target_type)
      by_class[g.labels[v]].push_back(static_cast<int>(v));
  for (int c = 0; c < num_classes; ++c)
    if (by_class[c].size() < static_cast<std::size_t>(2 * k + 1))
      throw TaskError("class '" + g.class_names[c] + "' has only " +
                      std::to_string(by_class[c].size()) + " labeled nodes; need " +
                      std::to_string(2 * k + 1) + " for a " + std::to_string(k) + "-shot task");

  std::mt19937_64 rng(seed);
  std::vector<TaskSpec> tasks;
  tasks.reserve(n_tasks);
  for (std::size_t i = 0; i < n_tasks; ++i) {
    TaskSpec task;
    task.k = k;
    task.seed = seed;
    task.support.num_classes = task.validation.num_classes = task.query.num_classes =
        num_classes;
    for (int c = 0; c < num_classes; ++c) {
      std::vector<int> pool = by_class[c];
      std::shuffle(pool.begin(), pool.end(), rng);
      for (int j = 0; j < k; ++j) task.support.pairs.push_back({pool[j], c});
      for (int j = k; j < 2 * k; ++j) task.validation.pairs.push_back({pool[j], c});
      std::vector<int> rest(pool.begin() + 2 * k, pool.end());
      std::sort(rest.begin(), rest.end());
      for (int v : rest) task.query.pairs.push_back({v, c});
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

}  // namespace gpawp
