#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "paratransit/branch_bound.hpp"
#include "paratransit/gcn.hpp"
#include "paratransit/oracle.hpp"
#include "paratransit/random.hpp"
#include "test_support.hpp"

using namespace paratransit;
using namespace paratransit::gcn;

namespace {

Instance small_instance(std::uint64_t seed, int requests = 8, int capacity = 4) {
  GeneratorConfig cfg;
  cfg.request_count = requests;
  cfg.capacity = capacity;
  cfg.max_group = std::min(3, capacity);
  return generate_instance(cfg, seed);
}

Matrix permutation_matrix(const std::vector<int>& perm) {
  const int n = static_cast<int>(perm.size());
  Matrix P = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) P(i, perm[i]) = 1.0;
  return P;
}

}  // namespace

TEST(Adjacency, TwoNodes) {
  Matrix A(2, 2);
  A << 0, 1, 1, 0;
  const Matrix H = normalized_adjacency(A);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(H(i, j), 0.5);
}

TEST(Adjacency, SingleNode) {
  const Matrix H = normalized_adjacency(Matrix::Zero(1, 1));
  EXPECT_DOUBLE_EQ(H(0, 0), 1.0);
}

TEST(Adjacency, PathGraph) {
  Matrix A = Matrix::Zero(3, 3);
  A(0, 1) = A(1, 0) = A(1, 2) = A(2, 1) = 1.0;
  const Matrix H = normalized_adjacency(A);
  EXPECT_NEAR(H(0, 1), 1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(H(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(H(0, 0), 0.5, 1e-15);
  EXPECT_EQ(H(0, 2), 0.0);
  EXPECT_TRUE(H.isApprox(H.transpose()));
}

TEST(Adjacency, CompleteGraphIsExactlyUniform) {
  for (int n : {1, 2, 3, 5, 8, 11, 16, 41}) {
    const Matrix H = normalized_adjacency(complete_adjacency(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) ASSERT_EQ(H(i, j), 1.0 / n) << "n=" << n;
  }
}

TEST(Adjacency, KnnIsSymmetricWithoutLoops) {
  const Instance inst = small_instance(4, 12, 6);
  const Matrix C = edge_features(inst);
  const Matrix A = knn_adjacency(C, 3);
  EXPECT_TRUE(A.isApprox(A.transpose()));
  for (int i = 0; i < A.rows(); ++i) {
    EXPECT_EQ(A(i, i), 0.0);
    EXPECT_GE(A.row(i).sum(), 3.0);
  }
}

TEST(Features, Shapes) {
  const Instance inst = small_instance(1);
  const Matrix X = node_features(inst);
  EXPECT_EQ(X.rows(), inst.customer_count() + 1);
  EXPECT_EQ(X.cols(), 4);
  EXPECT_EQ(X(0, 3), 1.0);
  EXPECT_EQ(X(0, 2), 0.0);
  for (int i = 1; i < X.rows(); ++i) {
    EXPECT_EQ(X(i, 3), 0.0);
    EXPECT_DOUBLE_EQ(X(i, 2), static_cast<double>(inst.demand(i)) / inst.capacity);
  }
  EXPECT_GE(X.leftCols(2).minCoeff(), 0.0);
  EXPECT_LE(X.leftCols(2).maxCoeff(), 1.0);
  const Matrix C = edge_features(inst);
  EXPECT_DOUBLE_EQ(C.maxCoeff(), 1.0);
}

TEST(Forward, HeatmapIsSymmetricProbability) {
  const Instance inst = small_instance(2);
  const Model model = init_model({}, 3);
  const Example ex = make_training_example(inst, exact_cvrp(inst).routes);
  const auto out = forward(model, ex.features, ex.a_hat, ex.edge_costs);
  const Matrix& P = out.heatmap;
  EXPECT_TRUE(P.isApprox(P.transpose(), 0.0));
  for (int i = 0; i < P.rows(); ++i) {
    EXPECT_EQ(P(i, i), 0.0);
    for (int j = 0; j < P.cols(); ++j) {
      if (i == j) continue;
      EXPECT_GT(P(i, j), 0.0);
      EXPECT_LT(P(i, j), 1.0);
    }
  }
}

TEST(Forward, CompleteGraphEmbeddingsCoincide) {
  const Instance inst = small_instance(2);
  const Example ex = make_training_example(inst, exact_cvrp(inst).routes);
  const auto out = forward(init_model({}, 4), ex.features, ex.a_hat, ex.edge_costs);
  for (int i = 1; i < out.embeddings.rows(); ++i) {
    EXPECT_LE((out.embeddings.row(i) - out.embeddings.row(0)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Forward, PermutationEquivariant) {
  const Instance inst = small_instance(6, 12, 5);
  const Example ex = make_training_example(inst, nearest_neighbor_routes(inst));
  const int n = static_cast<int>(ex.features.rows());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Model model = init_model({4, 16, 3, 16}, seed);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed + 100);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    const Matrix P = permutation_matrix(perm);
    const auto base = forward(model, ex.features, ex.a_hat, ex.edge_costs);
    const auto moved = forward(model, P * ex.features, P * ex.a_hat * P.transpose(),
                               P * ex.edge_costs * P.transpose());
    EXPECT_LE((moved.embeddings - P * base.embeddings).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((moved.heatmap - P * base.heatmap * P.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Loss, MatchesHandComputedValue) {
  Matrix P(2, 2), T(2, 2);
  P << 0, 0.8, 0.8, 0;
  T << 0, 1, 1, 0;
  const auto r = edge_loss(P, T, 2.0);
  EXPECT_NEAR(r.loss, -2.0 * std::log(0.8), 1e-15);
  T << 0, 0, 0, 0;
  EXPECT_NEAR(edge_loss(P, T, 2.0).loss, -std::log(0.2), 1e-15);
}

TEST(Loss, ClippingKeepsLossFinite) {
  Matrix P(2, 2), T(2, 2);
  P << 0, 1.0, 1.0, 0;
  T << 0, 0, 0, 0;
  const auto r = edge_loss(P, T, 1.0);
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_NEAR(r.loss, -std::log(1e-7), 1e-6);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  // d loss / d logit with P = sigmoid(logit).
  Rng rng(9);
  const int n = 5;
  Matrix logits = Matrix::Zero(n, n), T = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      logits(i, j) = logits(j, i) = rng.uniform(-3, 3);
      T(i, j) = T(j, i) = rng.uniform01() < 0.4 ? 1.0 : 0.0;
    }
  auto heat = [&](const Matrix& L) {
    Matrix P = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) P(i, j) = 1.0 / (1.0 + std::exp(-L(i, j)));
    return P;
  };
  const double w = default_pos_weight(T);
  const auto r = edge_loss(heat(logits), T, w);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Matrix up = logits, down = logits;
      up(i, j) += 1e-6;
      down(i, j) -= 1e-6;
      const double fd = (edge_loss(heat(up), T, w).loss - edge_loss(heat(down), T, w).loss) / 2e-6;
      EXPECT_NEAR(r.grad_logits(i, j), fd, 1e-7);
    }
}

TEST(GradCheck, SmallModelsOnTenSeeds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = small_instance(seed, 7, 3);
    const Example ex = make_training_example(inst, exact_cvrp(inst).routes);
    const Model model = init_model({4, 4, 3, 5}, seed);
    const auto report = gradient_check(model, {ex});
    EXPECT_LT(report.max_relative_error, 1e-4) << "seed " << seed;
    EXPECT_GT(report.checked, model.parameter_count() / 2);
  }
}

TEST(GradCheck, KnnGraphAndBatch) {
  std::vector<Example> batch;
  GraphOptions g;
  g.knn = 2;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Instance inst = small_instance(seed + 50, 8, 4);
    batch.push_back(make_training_example(inst, nearest_neighbor_routes(inst), g));
  }
  const auto report = gradient_check(init_model({4, 5, 2, 4}, 77), batch);
  EXPECT_LT(report.max_relative_error, 1e-4);
}

TEST(TrainingExample, TargetsMarkRouteEdges) {
  const Instance inst = fixtures::planar_instance({{1, 0}, {0, 1}, {1, 1}}, {1, 1, 1}, 2);
  const Routes routes{{{0, 1, 3, 4}, 2}, {{0, 2, 4}, 1}};
  const Example ex = make_training_example(inst, routes);
  ASSERT_EQ(ex.target.rows(), 4);
  EXPECT_EQ(ex.target(0, 1), 1.0);
  EXPECT_EQ(ex.target(1, 3), 1.0);
  EXPECT_EQ(ex.target(3, 0), 1.0);
  EXPECT_EQ(ex.target(0, 2), 1.0);
  EXPECT_EQ(ex.target(1, 2), 0.0);
  EXPECT_EQ(ex.target.sum(), 8.0);
  // 6 upper-triangle pairs, 4 positive.
  EXPECT_DOUBLE_EQ(ex.pos_weight, 0.5);
}

// On the complete graph all embeddings coincide, so the fit uses a kNN graph.
TEST(Training, OverfitsOneExample) {
  const Instance inst = small_instance(3);
  GraphOptions g;
  g.knn = 2;
  const Example ex = make_training_example(inst, exact_cvrp(inst).routes, g);
  const Model init = init_model({4, 32, 3, 32}, 1);
  TrainParams tp;
  tp.epochs = 500;
  tp.learning_rate = 1e-2;
  const auto r = train(init, {ex}, tp);
  ASSERT_EQ(r.loss_trace.size(), 500u);
  EXPECT_LT(loss_and_gradient(r.model, {ex}, nullptr), 0.1 * r.loss_trace.front());
}

TEST(Training, ZeroLearningRateLeavesParameters) {
  const Instance inst = small_instance(3);
  const Example ex = make_training_example(inst, exact_cvrp(inst).routes);
  const Model init = init_model({4, 8, 2, 8}, 1);
  TrainParams tp;
  tp.epochs = 5;
  tp.learning_rate = 0.0;
  EXPECT_EQ(train(init, {ex}, tp).model.flatten(), init.flatten());
}

TEST(Training, SameSeedSameTrace) {
  std::vector<Example> data;
  for (std::uint64_t s = 0; s < 6; ++s) {
    const Instance inst = small_instance(s);
    data.push_back(make_training_example(inst, exact_cvrp(inst).routes));
  }
  TrainParams tp;
  tp.epochs = 4;
  tp.batch_size = 2;
  tp.seed = 5;
  const Model init = init_model({4, 8, 2, 8}, 2);
  const auto a = train(init, data, tp);
  const auto b = train(init, data, tp);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(a.loss_trace.size(), 12u);
  EXPECT_EQ(a.model.flatten(), b.model.flatten());
}

TEST(Decode, UniformHeatmapFollowsNearestNeighbour) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = small_instance(seed, 12, 5);
    const int n = inst.customer_count() + 1;
    Matrix P = Matrix::Constant(n, n, 0.5);
    P.diagonal().setZero();
    EXPECT_EQ(decode_routes(P, inst, 1), nearest_neighbor_routes(inst)) << "seed " << seed;
  }
}

TEST(Decode, FullLoadsForceSeparateRoutes) {
  const Instance inst = fixtures::planar_instance({{1, 0}, {1, 0.1}}, {2, 2}, 2);
  Matrix P = Matrix::Constant(3, 3, 0.9);
  P.diagonal().setZero();
  const Routes r = decode_routes(P, inst, 3);
  EXPECT_EQ(r.size(), 2u);
  EXPECT_TRUE(check_feasibility(inst, r).empty());
}

TEST(Decode, BeamIsFeasibleAndNoWorseThanItsOwnGreedyOnPerfectHeatmap) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = small_instance(seed, 10, 4);
    const OracleResult best = exact_cvrp(inst);
    const Example ex = make_training_example(inst, best.routes);
    const Matrix P = ex.target * 0.98 + Matrix::Constant(ex.target.rows(), ex.target.cols(), 0.01);
    for (int beam : {1, 4}) {
      const Routes r = decode_routes(P, inst, beam);
      EXPECT_TRUE(check_feasibility(inst, r).empty());
    }
    EXPECT_LE(routes_cost(inst, decode_routes(P, inst, 8)), routes_cost(inst, nearest_neighbor_routes(inst)) * 1.5);
  }
}

TEST(Checkpoint, TextRoundTripIsExact) {
  const Model m = init_model({4, 7, 3, 5}, 42);
  const Model back = model_from_text(model_to_text(m));
  EXPECT_EQ(back.flatten(), m.flatten());
  EXPECT_EQ(back.hp.hidden, 7);
  fixtures::TempDir dir("ckpt");
  save_model(m, dir.path / "m.txt");
  EXPECT_EQ(load_model(dir.path / "m.txt").flatten(), m.flatten());
}

TEST(Checkpoint, CorruptTextIsRejected) {
  std::string text = model_to_text(init_model({4, 3, 2, 3}, 1));
  EXPECT_THROW(model_from_text("nonsense 1\n"), std::runtime_error);
  EXPECT_THROW(model_from_text(text.substr(0, text.size() / 2)), std::runtime_error);
  const auto pos = text.find("hidden 3");
  text.replace(pos, 8, "hidden 4");
  EXPECT_THROW(model_from_text(text), std::runtime_error);
}

TEST(Model, FlattenAssignRoundTrip) {
  Model m = init_model({4, 6, 3, 5}, 3);
  auto flat = m.flatten();
  EXPECT_EQ(flat.size(), m.parameter_count());
  for (auto& v : flat) v += 1.0;
  m.assign(flat);
  EXPECT_EQ(m.flatten(), flat);
  EXPECT_THROW(m.assign(std::vector<double>(3)), std::invalid_argument);
}
