#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gpawp/encoder.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

using gpawp::encode;
using gpawp::GcnParams;
using gpawp::HeteroGraph;
using gpawp::normalized_adjacency;
using gpawp::Tape;
using gpawp::Tensor;
using gpawp::Var;

namespace {

GcnParams identity_params(std::size_t d) {
  GcnParams p{Tensor::zeros({d, d}), Tensor::zeros({d, d})};
  for (std::size_t i = 0; i < d; ++i) {
    p.w1.at(i, i) = 1.0;
    p.w2.at(i, i) = 1.0;
  }
  return p;
}

}  // namespace

TEST_CASE("normalized adjacency of an edgeless graph is the identity") {
  auto g = builders::make_graph({0, 1}, {}, 1, 2, 1);
  auto a = normalized_adjacency(g);
  CHECK(a.values == std::vector<double>{1, 0, 0, 1});
}

TEST_CASE("normalized adjacency of a single edge") {
  auto g = builders::make_graph({0, 1}, {{0, 1, 0}}, 1, 2, 1);
  auto a = normalized_adjacency(g);
  for (double v : a.values) CHECK(v == Catch::Approx(0.5));
}

TEST_CASE("normalized adjacency row sums are one on a regular graph") {
  // 4-cycle: every node has degree 2
  auto g = builders::make_graph({0, 1, 0, 1}, {{0, 1, 0}, {1, 2, 0}, {2, 3, 0}, {3, 0, 0}}, 1, 2, 1);
  auto a = normalized_adjacency(g);
  for (std::size_t r = 0; r < 4; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 4; ++c) s += a.at(r, c);
    CHECK(s == Catch::Approx(1.0));
  }
  // symmetry
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) CHECK(a.at(r, c) == a.at(c, r));
}

TEST_CASE("encode on an edgeless graph with identity weights returns the features") {
  auto g = builders::make_graph({0, 1, 0}, {}, 2, 2, 1, {1, 2, 3, 4, 5, 6});
  auto h = encode(g, identity_params(2));
  CHECK(h.values == std::vector<double>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("encode of zero features is zero") {
  auto g = builders::make_graph({0, 1}, {{0, 1, 0}}, 2, 2, 1, {0, 0, 0, 0});
  auto h = encode(g, identity_params(2));
  for (double v : h.values) CHECK(v == 0.0);
}

TEST_CASE("encode on the two-node single-edge graph") {
  auto g = builders::make_graph({0, 1}, {{0, 1, 0}}, 2, 2, 1, {1, 0, 0, 1});
  auto h = encode(g, identity_params(2));
  for (double v : h.values) CHECK(v == Catch::Approx(0.5));
}

TEST_CASE("encode rejects mismatched feature dims") {
  auto g = builders::make_graph({0, 1}, {{0, 1, 0}}, 2, 2, 1);
  CHECK_THROWS_AS(encode(g, identity_params(3)), gpawp::ShapeError);
}

TEST_CASE("readout_sum") {
  Tensor h = Tensor::matrix(2, 2, {1, 2, 3, 4});
  CHECK(gpawp::readout_sum(h, {0}).values == std::vector<double>{1, 2});
  CHECK(gpawp::readout_sum(h, {0, 1}).values == std::vector<double>{4, 6});
  CHECK_THROWS_AS(gpawp::readout_sum(h, {}), gpawp::EmptyReadoutError);

  // additivity over disjoint sets
  Tensor big = Tensor::matrix(4, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  auto lhs = gpawp::readout_sum(big, {0, 1, 2, 3});
  auto a = gpawp::readout_sum(big, {0, 2});
  auto b = gpawp::readout_sum(big, {1, 3});
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(lhs.values[j] == Catch::Approx(a.values[j] + b.values[j]));
}

TEST_CASE("encode is permutation equivariant") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 5; ++rep) {
    auto g = builders::random_graph(rng, 10, 2, 3, 0.3);
    auto params = gpawp::init_gcn_params(3, 4, 17);

    std::vector<int> perm(g.node_count);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    HeteroGraph pg = g;
    for (std::size_t v = 0; v < g.node_count; ++v) {
      pg.node_types[perm[v]] = g.node_types[v];
      for (std::size_t j = 0; j < g.feature_dim; ++j)
        pg.features[perm[v] * g.feature_dim + j] = g.features[v * g.feature_dim + j];
    }
    pg.edges.clear();
    for (const auto& e : g.edges) pg.edges.push_back({perm[e.src], perm[e.dst], e.type});
    pg.finalize();

    auto h = encode(g, params);
    auto ph = encode(pg, params);
    for (std::size_t v = 0; v < g.node_count; ++v)
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(ph.at(perm[v], j) == Catch::Approx(h.at(v, j)).margin(1e-12));
  }
}

TEST_CASE("encoder gradients match finite differences") {
  std::mt19937_64 rng(41);
  auto g = builders::random_graph(rng, 8, 2, 3, 0.4);
  auto params = gpawp::init_gcn_params(3, 4, 99, 0.3);
  auto a_hat = normalized_adjacency(g);
  Tensor x = Tensor::matrix(g.node_count, g.feature_dim, g.features);

  auto loss_of = [&](const std::vector<double>& w1v, const std::vector<double>& w2v) {
    Tape t;
    Var h = gpawp::encode_on_tape(t, t.leaf(a_hat), t.leaf(x),
                                  t.leaf(Tensor({3, 4}, w1v)), t.leaf(Tensor({4, 4}, w2v)));
    return t.value(t.sum(t.mul(h, h))).item();  // scalar of H
  };

  Tape t;
  Var w1 = t.leaf(params.w1, true);
  Var w2 = t.leaf(params.w2, true);
  Var h = gpawp::encode_on_tape(t, t.leaf(a_hat), t.leaf(x), w1, w2);
  t.backward(t.sum(t.mul(h, h)));

  auto fd1 = oracle::central_fd(
      [&](const std::vector<double>& v) { return loss_of(v, params.w2.values); },
      params.w1.values, 1e-5);
  auto fd2 = oracle::central_fd(
      [&](const std::vector<double>& v) { return loss_of(params.w1.values, v); },
      params.w2.values, 1e-5);
  std::string why;
  CHECK(oracle::grads_agree(t.grad(w1).values, fd1, 1e-4, 1e-7, &why));
  INFO(why);
  CHECK(oracle::grads_agree(t.grad(w2).values, fd2, 1e-4, 1e-7, &why));
  INFO(why);
}

TEST_CASE("checkpoint round-trip is exact") {
  auto params = gpawp::init_gcn_params(3, 5, 7);
  auto path = std::filesystem::temp_directory_path() / "gpawp_test_ckpt.json";
  gpawp::save_checkpoint(params, path.string(), {{"seed", 7}});
  auto loaded = gpawp::load_checkpoint(path.string());
  CHECK(loaded.w1.values == params.w1.values);
  CHECK(loaded.w2.values == params.w2.values);
  CHECK(loaded.w1.shape == params.w1.shape);
  std::filesystem::remove(path);
}
