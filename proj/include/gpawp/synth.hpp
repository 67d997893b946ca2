#pragma once

#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpawp/graph.hpp"

namespace gpawp {

// Planted-partition heterogeneous generator. Class-informative signal lives
// in the first `informative_dims` feature dims of the types listed in
// `informative_types`; the remaining dims are noise everywhere. Every
// non-target node gets a latent community aligned with the label space, and
// edge densities depend on community agreement.
struct SynthSpec {
  std::vector<std::size_t> type_counts{100, 100, 100, 100};
  int target_type{0};
  std::size_t classes{3};
  std::size_t informative_dims{16};
  std::size_t noise_dims{48};
  std::vector<int> informative_types{0, 1};
  double amplitude{2.5};
  double signal_sigma{0.2};
  double noise_mean{-1.0};
  double noise_sigma{0.5};
  double p_target_intra{0.10};   // target-target, same class
  double p_target_inter{0.05};   // target-target, different class
  double p_attr_intra{0.12};     // target-attribute, same community
  double p_attr_inter{0.05};     // target-attribute, different community

  std::size_t feature_dim() const { return informative_dims + noise_dims; }

  void validate() const {
    if (type_counts.size() < 2) throw ValidationError("generator needs at least two node types");
    if (classes < 2) throw ValidationError("generator needs at least two classes");
    if (feature_dim() == 0) throw ValidationError("generator needs at least one feature dim");
    if (target_type < 0 || static_cast<std::size_t>(target_type) >= type_counts.size())
      throw ValidationError("generator target type out of range");
    if (type_counts[target_type] < classes)
      throw ValidationError("fewer target nodes than classes");
    for (int t : informative_types)
      if (t < 0 || static_cast<std::size_t>(t) >= type_counts.size())
        throw ValidationError("informative type " + std::to_string(t) + " out of range");
    for (double p : {p_target_intra, p_target_inter, p_attr_intra, p_attr_inter})
      if (p < 0.0 || p > 1.0)
        throw ValidationError("edge density " + std::to_string(p) + " outside [0,1]");
  }

  // ground truth for pruning-precision oracles: blocks lying entirely in the
  // noise dims
  std::vector<int> noise_blocks(std::size_t t) const {
    std::size_t bs = feature_dim() / t;
    std::vector<int> out;
    for (std::size_t b = 0; b < t; ++b)
      if (b * bs >= informative_dims) out.push_back(static_cast<int>(b));
    return out;
  }
  std::vector<int> informative_blocks(std::size_t t) const {
    std::size_t bs = feature_dim() / t;
    std::vector<int> out;
    for (std::size_t b = 0; b < t; ++b)
      if (b * bs < informative_dims) out.push_back(static_cast<int>(b));
    return out;
  }
};

inline void to_json(nlohmann::json& j, const SynthSpec& s) {
  j = nlohmann::json{{"type_counts", s.type_counts},
                     {"target_type", s.target_type},
                     {"classes", s.classes},
                     {"informative_dims", s.informative_dims},
                     {"noise_dims", s.noise_dims},
                     {"informative_types", s.informative_types},
                     {"amplitude", s.amplitude},
                     {"signal_sigma", s.signal_sigma},
                     {"noise_mean", s.noise_mean},
                     {"noise_sigma", s.noise_sigma},
                     {"p_target_intra", s.p_target_intra},
                     {"p_target_inter", s.p_target_inter},
                     {"p_attr_intra", s.p_attr_intra},
                     {"p_attr_inter", s.p_attr_inter}};
}

inline void from_json(const nlohmann::json& j, SynthSpec& s) {
  SynthSpec defaults;
  s.type_counts = j.value("type_counts", defaults.type_counts);
  s.target_type = j.value("target_type", defaults.target_type);
  s.classes = j.value("classes", defaults.classes);
  s.informative_dims = j.value("informative_dims", defaults.informative_dims);
  s.noise_dims = j.value("noise_dims", defaults.noise_dims);
  s.informative_types = j.value("informative_types", defaults.informative_types);
  s.amplitude = j.value("amplitude", defaults.amplitude);
  s.signal_sigma = j.value("signal_sigma", defaults.signal_sigma);
  s.noise_mean = j.value("noise_mean", defaults.noise_mean);
  s.noise_sigma = j.value("noise_sigma", defaults.noise_sigma);
  s.p_target_intra = j.value("p_target_intra", defaults.p_target_intra);
  s.p_target_inter = j.value("p_target_inter", defaults.p_target_inter);
  s.p_attr_intra = j.value("p_attr_intra", defaults.p_attr_intra);
  s.p_attr_inter = j.value("p_attr_inter", defaults.p_attr_inter);
}

inline HeteroGraph synth_graph(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);

  HeteroGraph g;
  std::size_t n_types = spec.type_counts.size();
  for (std::size_t t = 0; t < n_types; ++t) g.type_names.push_back("t" + std::to_string(t));
  g.edge_type_names.push_back("tt");  // target-target
  for (std::size_t t = 0; t < n_types; ++t)
    if (static_cast<int>(t) != spec.target_type)
      g.edge_type_names.push_back("ta" + std::to_string(t));
  for (std::size_t c = 0; c < spec.classes; ++c) g.class_names.push_back("c" + std::to_string(c));
  g.target_type = spec.target_type;
  g.feature_dim = spec.feature_dim();

  for (std::size_t t = 0; t < n_types; ++t)
    for (std::size_t i = 0; i < spec.type_counts[t]; ++i)
      g.node_types.push_back(static_cast<int>(t));
  g.node_count = g.node_types.size();

  // latent community per node; the label of target nodes
  std::vector<int> community(g.node_count);
  g.labels.assign(g.node_count, -1);
  std::uniform_int_distribution<int> cdist(0, static_cast<int>(spec.classes) - 1);
  for (std::size_t v = 0; v < g.node_count; ++v) {
    if (g.node_types[v] == spec.target_type) {
      // balanced round-robin classes over target nodes
      community[v] = static_cast<int>(v % spec.classes);
      g.labels[v] = community[v];
    } else {
      community[v] = cdist(rng);
    }
  }

  std::vector<bool> informative(n_types, false);
  for (int t : spec.informative_types) informative[t] = true;

  // class sign patterns over the informative dims, period 4. Position 0 of
  // every group of four is elevated for all classes (shared task signal);
  // positions 1..3 are one-hot per class and suppressed otherwise. Equal-size
  // blocks of informative dims therefore carry identical composition: one
  // shared dim plus one dim per class. Classes beyond three fall back to
  // random signs.
  std::vector<std::vector<double>> pattern(spec.classes,
                                           std::vector<double>(spec.informative_dims));
  for (std::size_t c = 0; c < spec.classes; ++c)
    for (std::size_t j = 0; j < spec.informative_dims; ++j) {
      std::size_t pos = j % 4;
      if (c < 3)
        pattern[c][j] = (pos == 0 || pos == 1 + c) ? 1.0 : -1.0;
      else
        pattern[c][j] = rng() % 2 ? 1.0 : -1.0;
    }

  std::normal_distribution<double> sig(0.0, spec.signal_sigma);
  std::normal_distribution<double> noise(spec.noise_mean, spec.noise_sigma);
  g.features.assign(g.node_count * g.feature_dim, 0.0);
  for (std::size_t v = 0; v < g.node_count; ++v) {
    int c = community[v];
    bool info = informative[g.node_types[v]];
    for (std::size_t j = 0; j < spec.informative_dims; ++j) {
      double base = sig(rng);
      if (info) base += spec.amplitude * pattern[c][j];
      g.features[v * g.feature_dim + j] = base;
    }
    for (std::size_t j = spec.informative_dims; j < g.feature_dim; ++j)
      g.features[v * g.feature_dim + j] = noise(rng);
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> attr_edge_type(n_types, -1);
  {
    int next = 1;
    for (std::size_t t = 0; t < n_types; ++t)
      if (static_cast<int>(t) != spec.target_type) attr_edge_type[t] = next++;
  }
  for (std::size_t i = 0; i < g.node_count; ++i) {
    if (g.node_types[i] != spec.target_type) continue;
    for (std::size_t j = i + 1; j < g.node_count; ++j) {
      int tj = g.node_types[j];
      double p;
      int etype;
      if (tj == spec.target_type) {
        p = community[i] == community[j] ? spec.p_target_intra : spec.p_target_inter;
        etype = 0;
      } else {
        p = community[i] == community[j] ? spec.p_attr_intra : spec.p_attr_inter;
        etype = attr_edge_type[tj];
      }
      if (unit(rng) < p)
        g.edges.push_back({static_cast<int>(i), static_cast<int>(j), etype});
    }
  }

  g.finalize();
  return g;
}

}  // namespace gpawp
