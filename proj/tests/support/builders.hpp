#pragma once

// Shared fixtures for building small in-memory graphs in tests.

#include <random>
#include <string>
#include <vector>

#include "gpawp/graph.hpp"

namespace builders {

inline gpawp::HeteroGraph make_graph(std::vector<int> node_types,
                                     std::vector<gpawp::Edge> edges, std::size_t feature_dim,
                                     std::size_t n_types, std::size_t n_edge_types,
                                     std::vector<double> features = {}) {
  gpawp::HeteroGraph g;
  g.node_count = node_types.size();
  g.node_types = std::move(node_types);
  g.edges = std::move(edges);
  g.feature_dim = feature_dim;
  if (features.empty())
    g.features.assign(g.node_count * feature_dim, 1.0);
  else
    g.features = std::move(features);
  for (std::size_t t = 0; t < n_types; ++t) g.type_names.push_back("t" + std::to_string(t));
  for (std::size_t r = 0; r < n_edge_types; ++r)
    g.edge_type_names.push_back("r" + std::to_string(r));
  g.labels.assign(g.node_count, -1);
  g.finalize();
  return g;
}

// Random typed graph with random positive-leaning features; used by the
// permutation/partition property tests and the gradient sweeps.
inline gpawp::HeteroGraph random_graph(std::mt19937_64& rng, std::size_t n_nodes,
                                       std::size_t n_types, std::size_t feature_dim,
                                       double edge_prob) {
  std::vector<int> types(n_nodes);
  for (auto& t : types) t = static_cast<int>(rng() % n_types);
  std::vector<gpawp::Edge> edges;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (std::size_t j = i + 1; j < n_nodes; ++j)
      if (unit(rng) < edge_prob)
        edges.push_back({static_cast<int>(i), static_cast<int>(j),
                         static_cast<int>(rng() % 2)});
  std::vector<double> feats(n_nodes * feature_dim);
  std::uniform_real_distribution<double> fdist(0.1, 1.5);
  for (auto& f : feats) f = fdist(rng);
  return make_graph(std::move(types), std::move(edges), feature_dim, n_types, 2,
                    std::move(feats));
}

}  // namespace builders
