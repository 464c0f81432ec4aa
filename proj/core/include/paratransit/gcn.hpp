#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "paratransit/instance.hpp"
#include "paratransit/milp_model.hpp"

namespace paratransit::gcn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// The GCN works on the geometric graph: node 0 is the (single) depot and
// node i in 1..n is customer i. The end-depot copy of the MILP maps to 0.

struct Hyperparams {
  int input_dim = 4;
  int hidden = 32;
  int layers = 3;        ///< K graph-convolution layers; the last one is linear
  int edge_hidden = 32;  ///< width of the pairwise edge scorer
};

/// Layer weights W_1..W_K and the edge head
///   logit_ij = v . ReLU(W_e [h_i; h_j; c_ij] + b_e) + b,
/// symmetrized as (logit_ij + logit_ji) / 2.
struct Model {
  Hyperparams hp;
  std::vector<Matrix> weights;  ///< weights[k] is (in x out)
  Matrix edge_weights;          ///< edge_hidden x (2 * hidden + 1)
  Vector edge_bias;             ///< edge_hidden
  Vector edge_out;              ///< v, edge_hidden
  double out_bias = 0.0;

  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(const std::vector<double>& flat);
  void check_dimensions() const;
};

/// Glorot-uniform weights, zero biases; deterministic for a seed.
Model init_model(const Hyperparams& hp, std::uint64_t seed);

/// D^{-1/2} (A + I) D^{-1/2} with D_ii = sum_j (A + I)_ij.
Matrix normalized_adjacency(const Matrix& adjacency);

/// Complete graph over n nodes (no self-loops).
Matrix complete_adjacency(int nodes);
/// Symmetrized k-nearest-neighbour graph over the given edge-cost matrix.
Matrix knn_adjacency(const Matrix& edge_costs, int k);

/// Rows: (x, y, q_i / Q, depot flag) with coordinates min-max scaled per
/// axis to [0, 1]. One row per graph node.
Matrix node_features(const Instance& instance);

/// Graph-node cost matrix, divided by its largest entry.
Matrix edge_features(const Instance& instance);

struct ForwardCache {
  std::vector<Matrix> inputs;       ///< H_{k-1}
  std::vector<Matrix> propagated;   ///< A_hat H_{k-1}
  std::vector<Matrix> pre;          ///< A_hat H_{k-1} W_k
  Matrix embeddings;                ///< H_K
  Matrix left, right;               ///< per-node halves of the edge pre-activation
  std::vector<Matrix> edge_pre;     ///< per source node i: (N x edge_hidden) pre-activations
  Matrix logits;                    ///< symmetrized
};

struct ForwardResult {
  Matrix embeddings;
  Matrix heatmap;  ///< symmetric, zero diagonal, entries in (0, 1)
  Matrix logits;   ///< symmetrized logits; diagonal is 0 and unused
};

ForwardResult forward(const Model& model, const Matrix& features, const Matrix& a_hat,
                      const Matrix& edge_costs, ForwardCache* cache = nullptr);

struct LossResult {
  double loss = 0.0;
  Matrix grad_logits;  ///< dLoss/dlogit, upper triangle only
};

/// Class-weighted binary cross-entropy averaged over the upper triangle.
/// Probabilities are clipped to [1e-7, 1 - 1e-7]; clipped entries carry no gradient.
LossResult edge_loss(const Matrix& heatmap, const Matrix& target, double pos_weight);

/// (#negative edges) / (#positive edges) over the upper triangle.
double default_pos_weight(const Matrix& target);

/// Parameter gradients of a loss whose logit gradient is `grad_logits`.
std::vector<double> backward(const Model& model, const Matrix& a_hat, const Matrix& edge_costs,
                             const ForwardCache& cache, const Matrix& grad_logits);

struct Example {
  Matrix features;
  Matrix adjacency;
  Matrix a_hat;
  Matrix edge_costs;
  Matrix target;
  double pos_weight = 1.0;
};

struct GraphOptions {
  std::optional<int> knn;  ///< sparsify the input graph; complete graph when unset
};

/// target_ij = 1 iff i and j are consecutive on some route (undirected).
Example make_training_example(const Instance& instance, const Routes& optimal,
                              const GraphOptions& graph = {});

/// Mean loss and full parameter gradient over a set of examples.
double loss_and_gradient(const Model& model, const std::vector<Example>& examples,
                         std::vector<double>* gradient);

struct TrainParams {
  int epochs = 200;
  int batch_size = 0;  ///< 0: full batch
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  bool verbose = false;
};

struct TrainResult {
  Model model;
  std::vector<double> loss_trace;  ///< mean training loss per step
};

/// Adam on mini-batches; throws std::runtime_error on a non-finite loss.
TrainResult train(Model model, const std::vector<Example>& dataset, const TrainParams& params);

/// Capacity-feasible routes guided by the heatmap. Greedy (beam_width 1)
/// follows the most probable feasible edge, breaking ties by cost then id.
/// Wider beams rank partial solutions by summed log-probability and return
/// the cheapest complete one.
Routes decode_routes(const Matrix& heatmap, const Instance& instance, int beam_width = 1);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);
std::string model_to_text(const Model& model);
Model model_from_text(const std::string& text);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;  ///< coordinates where a ReLU changed state under the probe
};

/// Central finite differences of the mean loss against backward().
GradCheckReport gradient_check(const Model& model, const std::vector<Example>& examples,
                               double step = 1e-5);

}  // namespace paratransit::gcn
