#pragma once

#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpawp/graph.hpp"
#include "gpawp/tape.hpp"

namespace gpawp {

// Frozen-backbone 2-layer GCN parameters.
struct GcnParams {
  Tensor w1;  // feature_dim x hidden_dim
  Tensor w2;  // hidden_dim x hidden_dim

  std::size_t feature_dim() const { return w1.shape[0]; }
  std::size_t hidden_dim() const { return w1.shape[1]; }
};

// Identity-padded init with a small uniform perturbation: keeps the encoder
// close to a plain graph-smoothing operator at the start of pre-training.
inline GcnParams init_gcn_params(std::size_t feature_dim, std::size_t hidden_dim,
                                 std::uint64_t seed, double noise = 0.01) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-noise, noise);
  GcnParams p{Tensor::zeros({feature_dim, hidden_dim}), Tensor::zeros({hidden_dim, hidden_dim})};
  for (std::size_t i = 0; i < feature_dim; ++i)
    for (std::size_t j = 0; j < hidden_dim; ++j)
      p.w1.at(i, j) = (i == j ? 1.0 : 0.0) + u(rng);
  for (std::size_t i = 0; i < hidden_dim; ++i)
    for (std::size_t j = 0; j < hidden_dim; ++j)
      p.w2.at(i, j) = (i == j ? 1.0 : 0.0) + u(rng);
  return p;
}

// A_hat = D^{-1/2} (A + I) D^{-1/2} over the symmetrized full topology.
inline Tensor normalized_adjacency(const HeteroGraph& g) {
  std::size_t n = g.node_count;
  Tensor a = Tensor::zeros({n, n});
  for (std::size_t v = 0; v < n; ++v) {
    a.at(v, v) = 1.0;
    for (int u : g.adjacency[v]) a.at(v, u) = 1.0;
  }
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t v = 0; v < n; ++v) {
    double deg = 0.0;
    for (std::size_t u = 0; u < n; ++u) deg += a.at(v, u);
    inv_sqrt_deg[v] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t u = 0; u < n; ++u) a.at(v, u) *= inv_sqrt_deg[v] * inv_sqrt_deg[u];
  return a;
}

// H = A_hat * ReLU(A_hat * X * W1) * W2, on the tape so encoder weights can
// receive gradients during pre-training.
inline Var encode_on_tape(Tape& t, Var a_hat, Var x, Var w1, Var w2) {
  const Tensor& tx = t.value(x);
  const Tensor& tw = t.value(w1);
  if (tx.shape[1] != tw.shape[0])
    throw ShapeError("feature dim " + shape_str(tx.shape) + " does not match encoder weight " +
                     shape_str(tw.shape));
  Var layer1 = t.relu(t.matmul(t.matmul(a_hat, x), w1));
  return t.matmul(t.matmul(a_hat, layer1), w2);
}

// Plain forward pass; used wherever the backbone is frozen.
inline Tensor encode(const HeteroGraph& g, const GcnParams& params) {
  Tape t;
  Var a_hat = t.leaf(normalized_adjacency(g));
  Var x = t.leaf(Tensor::matrix(g.node_count, g.feature_dim, g.features));
  Var h = encode_on_tape(t, a_hat, x, t.leaf(params.w1), t.leaf(params.w2));
  return t.value(h);
}

inline Tensor readout_sum(const Tensor& embeddings, const std::vector<int>& nodes) {
  if (nodes.empty()) throw EmptyReadoutError("readout over an empty node set");
  std::size_t d = embeddings.shape[1];
  Tensor out = Tensor::zeros({d});
  for (int v : nodes) {
    if (v < 0 || static_cast<std::size_t>(v) >= embeddings.shape[0])
      throw ContractError("readout node " + std::to_string(v) + " out of range");
    for (std::size_t j = 0; j < d; ++j) out.values[j] += embeddings.at(v, j);
  }
  return out;
}

inline void save_checkpoint(const GcnParams& params, const std::string& path,
                            const nlohmann::json& meta = nlohmann::json::object()) {
  nlohmann::json j{{"kind", "gcn_checkpoint"},
                   {"feature_dim", params.feature_dim()},
                   {"hidden_dim", params.hidden_dim()},
                   {"w1", params.w1.values},
                   {"w2", params.w2.values},
                   {"meta", meta}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

inline GcnParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("kind") != "gcn_checkpoint") throw IoError("not a checkpoint file: " + path);
    std::size_t d = j.at("feature_dim").get<std::size_t>();
    std::size_t dh = j.at("hidden_dim").get<std::size_t>();
    return GcnParams{Tensor({d, dh}, j.at("w1").get<std::vector<double>>()),
                     Tensor({dh, dh}, j.at("w2").get<std::vector<double>>())};
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint " + path + ": " + e.what());
  }
}

}  // namespace gpawp
