#pragma once

#include <algorithm>
#include <deque>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpawp/error.hpp"

namespace gpawp {

struct Edge {
  int src{};
  int dst{};
  int type{};
};

// Typed graph with dense node ids, per-node features, and labels on the
// target node type. Immutable after construction; undirected adjacency is
// derived once for traversal and normalization.
struct HeteroGraph {
  std::size_t node_count{};
  std::vector<int> node_types;              // phi: V -> A
  std::vector<Edge> edges;                  // psi via Edge::type
  std::size_t feature_dim{};
  std::vector<double> features;             // node_count x feature_dim, row-major
  std::vector<std::string> type_names;      // A
  std::vector<std::string> edge_type_names; // R
  std::vector<std::string> class_names;     // label ids, order of first appearance
  std::vector<int> labels;                  // -1 = unlabeled
  int target_type{0};

  std::vector<std::vector<int>> adjacency;  // undirected, sorted, deduplicated

  std::size_t num_types() const { return type_names.size(); }
  std::size_t num_classes() const { return class_names.size(); }

  const double* feature_row(int v) const { return features.data() + v * feature_dim; }

  void finalize() {
    validate();
    adjacency.assign(node_count, {});
    for (const Edge& e : edges) {
      adjacency[e.src].push_back(e.dst);
      adjacency[e.dst].push_back(e.src);
    }
    for (auto& nbrs : adjacency) {
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
  }

  void validate() const {
    if (node_types.size() != node_count)
      throw ValidationError("node type count " + std::to_string(node_types.size()) +
                            " does not match node count " + std::to_string(node_count));
    if (features.size() != node_count * feature_dim)
      throw ValidationError("feature matrix size does not match node count x feature dim");
    if (type_names.size() + edge_type_names.size() <= 2)
      throw ValidationError("graph is not heterogeneous: |A|+|R| = " +
                            std::to_string(type_names.size() + edge_type_names.size()) +
                            " must exceed 2");
    for (std::size_t v = 0; v < node_count; ++v)
      if (node_types[v] < 0 || static_cast<std::size_t>(node_types[v]) >= type_names.size())
        throw ValidationError("node " + std::to_string(v) + " has unknown type id " +
                              std::to_string(node_types[v]));
    for (const Edge& e : edges) {
      if (e.src < 0 || static_cast<std::size_t>(e.src) >= node_count || e.dst < 0 ||
          static_cast<std::size_t>(e.dst) >= node_count)
        throw ValidationError("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                              ") has endpoint outside 0.." + std::to_string(node_count - 1));
      if (e.type < 0 || static_cast<std::size_t>(e.type) >= edge_type_names.size())
        throw ValidationError("edge has unknown type id " + std::to_string(e.type));
    }
    if (target_type < 0 || static_cast<std::size_t>(target_type) >= type_names.size())
      throw ValidationError("target type id " + std::to_string(target_type) + " unknown");
  }
};

// One homogeneous view of the template. Node ids are the original graph ids;
// local ids index the view's own node list.
struct SubgraphView {
  std::vector<int> nodes;                  // ascending original ids
  std::vector<int> local_of_orig;          // -1 when absent
  std::vector<std::pair<int, int>> edges;  // local ids

  bool contains(int orig) const {
    return orig >= 0 && static_cast<std::size_t>(orig) < local_of_orig.size() &&
           local_of_orig[orig] >= 0;
  }
};

// |A|+1 homogeneous views: views[0] is the full topology with types erased,
// views[i] (i>=1) the induced subgraph on nodes of type i-1.
struct SubgraphSet {
  std::vector<SubgraphView> views;

  std::size_t count() const { return views.size(); }
};

inline SubgraphSet apply_template(const HeteroGraph& g) {
  SubgraphSet out;
  out.views.resize(g.num_types() + 1);

  SubgraphView& full = out.views[0];
  full.nodes.resize(g.node_count);
  full.local_of_orig.resize(g.node_count);
  for (std::size_t v = 0; v < g.node_count; ++v) {
    full.nodes[v] = static_cast<int>(v);
    full.local_of_orig[v] = static_cast<int>(v);
  }
  for (const Edge& e : g.edges) full.edges.emplace_back(e.src, e.dst);

  for (std::size_t t = 0; t < g.num_types(); ++t) {
    SubgraphView& view = out.views[t + 1];
    view.local_of_orig.assign(g.node_count, -1);
    for (std::size_t v = 0; v < g.node_count; ++v)
      if (g.node_types[v] == static_cast<int>(t)) {
        view.local_of_orig[v] = static_cast<int>(view.nodes.size());
        view.nodes.push_back(static_cast<int>(v));
      }
    for (const Edge& e : g.edges)
      if (g.node_types[e.src] == static_cast<int>(t) && g.node_types[e.dst] == static_cast<int>(t))
        view.edges.emplace_back(view.local_of_orig[e.src], view.local_of_orig[e.dst]);
  }
  return out;
}

// BFS ball of radius h around a center node, undirected traversal on the
// full topology. Supplies the contextual-subgraph support for readouts.
struct EgoSubgraph {
  int center{};
  int hops{};
  std::vector<int> nodes;  // ascending, includes center
};

inline EgoSubgraph ego_subgraph(const HeteroGraph& g, int v, int hops) {
  if (v < 0 || static_cast<std::size_t>(v) >= g.node_count)
    throw ContractError("ego center " + std::to_string(v) + " out of range");
  if (hops < 0) throw ContractError("negative hop radius");
  std::vector<int> dist(g.node_count, -1);
  std::deque<int> queue{v};
  dist[v] = 0;
  EgoSubgraph ego;
  ego.center = v;
  ego.hops = hops;
  ego.nodes.push_back(v);
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    if (dist[u] == hops) continue;
    for (int w : g.adjacency[u])
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        ego.nodes.push_back(w);
        queue.push_back(w);
      }
  }
  std::sort(ego.nodes.begin(), ego.nodes.end());
  return ego;
}

namespace detail {

inline int name_index(const std::vector<std::string>& names, const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace detail

// Line-oriented JSON graph format: one meta object first, then node and edge
// objects in any order.
inline HeteroGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph file " + path);

  HeteroGraph g;
  std::vector<bool> seen;
  bool have_meta = false;
  std::string line;
  std::size_t line_no = 0;
  std::size_t node_lines = 0;

  // first pass collects everything; ids are validated once counts are known
  struct PendingEdge {
    int src, dst, type;
  };
  std::vector<std::tuple<int, int, std::vector<double>, int>> nodes;  // id, type, feats, label
  std::vector<PendingEdge> pending_edges;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    try {
      std::string kind = j.at("kind").get<std::string>();
      if (kind == "meta") {
        if (have_meta) throw ParseError("duplicate meta line", line_no);
        g.type_names = j.at("types").get<std::vector<std::string>>();
        g.edge_type_names = j.at("edge_types").get<std::vector<std::string>>();
        g.feature_dim = j.at("feature_dim").get<std::size_t>();
        std::string target = j.at("target_type").get<std::string>();
        g.target_type = detail::name_index(g.type_names, target);
        if (g.target_type < 0) throw ParseError("unknown target type '" + target + "'", line_no);
        have_meta = true;
      } else if (kind == "node") {
        if (!have_meta) throw ParseError("node line before meta", line_no);
        int id = j.at("id").get<int>();
        std::string type = j.at("type").get<std::string>();
        int tid = detail::name_index(g.type_names, type);
        if (tid < 0) throw ParseError("unknown node type '" + type + "'", line_no);
        auto feats = j.at("features").get<std::vector<double>>();
        if (feats.size() != g.feature_dim)
          throw ParseError("expected " + std::to_string(g.feature_dim) + " features, got " +
                               std::to_string(feats.size()),
                           line_no);
        int label = -1;
        if (j.contains("label") && !j["label"].is_null()) {
          std::string name = j["label"].get<std::string>();
          label = detail::name_index(g.class_names, name);
          if (label < 0) {
            label = static_cast<int>(g.class_names.size());
            g.class_names.push_back(name);
          }
        }
        nodes.emplace_back(id, tid, std::move(feats), label);
        ++node_lines;
      } else if (kind == "edge") {
        if (!have_meta) throw ParseError("edge line before meta", line_no);
        std::string type = j.at("type").get<std::string>();
        int tid = detail::name_index(g.edge_type_names, type);
        if (tid < 0) throw ParseError("unknown edge type '" + type + "'", line_no);
        pending_edges.push_back({j.at("src").get<int>(), j.at("dst").get<int>(), tid});
      } else {
        throw ParseError("unknown record kind '" + kind + "'", line_no);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad record: ") + e.what(), line_no);
    }
  }
  if (!have_meta) throw ParseError("missing meta line", std::max<std::size_t>(line_no, 1));

  g.node_count = node_lines;
  g.node_types.assign(g.node_count, -1);
  g.labels.assign(g.node_count, -1);
  g.features.assign(g.node_count * g.feature_dim, 0.0);
  seen.assign(g.node_count, false);
  for (auto& [id, tid, feats, label] : nodes) {
    if (id < 0 || static_cast<std::size_t>(id) >= g.node_count)
      throw ValidationError("node id " + std::to_string(id) + " outside dense range 0.." +
                            std::to_string(g.node_count - 1));
    if (seen[id]) throw ValidationError("duplicate node id " + std::to_string(id));
    seen[id] = true;
    g.node_types[id] = tid;
    g.labels[id] = label;
    std::copy(feats.begin(), feats.end(), g.features.begin() + id * g.feature_dim);
  }
  for (const auto& e : pending_edges) g.edges.push_back({e.src, e.dst, e.type});

  g.finalize();
  return g;
}

inline void save_graph(const HeteroGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write graph file " + path);
  nlohmann::json meta{{"kind", "meta"},
                      {"types", g.type_names},
                      {"edge_types", g.edge_type_names},
                      {"feature_dim", g.feature_dim},
                      {"target_type", g.type_names[g.target_type]}};
  out << meta.dump() << '\n';
  for (std::size_t v = 0; v < g.node_count; ++v) {
    nlohmann::json node{{"kind", "node"},
                        {"id", v},
                        {"type", g.type_names[g.node_types[v]]},
                        {"features", std::vector<double>(g.feature_row(v),
                                                         g.feature_row(v) + g.feature_dim)}};
    if (g.labels[v] >= 0)
      node["label"] = g.class_names[g.labels[v]];
    else
      node["label"] = nullptr;
    out << node.dump() << '\n';
  }
  for (const Edge& e : g.edges) {
    nlohmann::json edge{{"kind", "edge"},
                        {"src", e.src},
                        {"dst", e.dst},
                        {"type", g.edge_type_names[e.type]}};
    out << edge.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace gpawp
