#include "paratransit/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "paratransit/random.hpp"

namespace paratransit::gcn {

namespace {

constexpr double kProbClip = 1e-7;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

int graph_size(const Instance& instance) { return instance.customer_count() + 1; }

}  // namespace

std::size_t Model::parameter_count() const {
  std::size_t count = 0;
  for (const auto& w : weights) count += static_cast<std::size_t>(w.size());
  count += static_cast<std::size_t>(edge_weights.size() + edge_bias.size() + edge_out.size()) + 1;
  return count;
}

std::vector<double> Model::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  auto push_matrix = [&](const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  };
  for (const auto& w : weights) push_matrix(w);
  push_matrix(edge_weights);
  for (Eigen::Index i = 0; i < edge_bias.size(); ++i) flat.push_back(edge_bias(i));
  for (Eigen::Index i = 0; i < edge_out.size(); ++i) flat.push_back(edge_out(i));
  flat.push_back(out_bias);
  return flat;
}

void Model::assign(const std::vector<double>& flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("Model::assign: expected " + std::to_string(parameter_count()) +
                                " parameters, got " + std::to_string(flat.size()));
  }
  std::size_t k = 0;
  auto pull_matrix = [&](Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[k++];
  };
  for (auto& w : weights) pull_matrix(w);
  pull_matrix(edge_weights);
  for (Eigen::Index i = 0; i < edge_bias.size(); ++i) edge_bias(i) = flat[k++];
  for (Eigen::Index i = 0; i < edge_out.size(); ++i) edge_out(i) = flat[k++];
  out_bias = flat[k++];
}

void Model::check_dimensions() const {
  if (hp.layers < 1) throw std::invalid_argument("gcn: need at least one layer");
  if (static_cast<int>(weights.size()) != hp.layers) {
    throw std::invalid_argument("gcn: expected " + std::to_string(hp.layers) + " layer matrices, got " +
                                std::to_string(weights.size()));
  }
  Eigen::Index in = hp.input_dim;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k].rows() != in || weights[k].cols() != hp.hidden) {
      throw std::invalid_argument("gcn: layer " + std::to_string(k + 1) + " weight is " +
                                  std::to_string(weights[k].rows()) + "x" + std::to_string(weights[k].cols()) +
                                  ", expected " + std::to_string(in) + "x" + std::to_string(hp.hidden));
    }
    in = hp.hidden;
  }
  if (edge_weights.rows() != hp.edge_hidden || edge_weights.cols() != 2 * hp.hidden + 1 ||
      edge_bias.size() != hp.edge_hidden || edge_out.size() != hp.edge_hidden) {
    throw std::invalid_argument("gcn: edge head dimensions do not match hyperparameters");
  }
}

Model init_model(const Hyperparams& hp, std::uint64_t seed) {
  if (hp.input_dim < 1 || hp.hidden < 1 || hp.layers < 1 || hp.edge_hidden < 1) {
    throw std::invalid_argument("init_model: all dimensions must be positive");
  }
  Rng rng(seed);
  auto glorot = [&](Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
    return m;
  };
  Model model;
  model.hp = hp;
  int in = hp.input_dim;
  for (int k = 0; k < hp.layers; ++k) {
    model.weights.push_back(glorot(in, hp.hidden, in, hp.hidden));
    in = hp.hidden;
  }
  const int edge_in = 2 * hp.hidden + 1;
  model.edge_weights = glorot(hp.edge_hidden, edge_in, edge_in, hp.edge_hidden);
  model.edge_bias = Vector::Zero(hp.edge_hidden);
  const Matrix v = glorot(hp.edge_hidden, 1, hp.edge_hidden, 1);
  model.edge_out = v.col(0);
  model.out_bias = 0.0;
  return model;
}

Matrix normalized_adjacency(const Matrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw std::invalid_argument("normalized_adjacency: not square");
  const Eigen::Index n = adjacency.rows();
  Matrix with_loops = adjacency;
  for (Eigen::Index i = 0; i < n; ++i) with_loops(i, i) = 1.0;
  const Vector degree = with_loops.rowwise().sum();
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = with_loops(i, j) / std::sqrt(degree(i) * degree(j));
  return out;
}

Matrix complete_adjacency(int nodes) {
  Matrix a = Matrix::Ones(nodes, nodes);
  a.diagonal().setZero();
  return a;
}

Matrix knn_adjacency(const Matrix& edge_costs, int k) {
  const Eigen::Index n = edge_costs.rows();
  Matrix a = Matrix::Zero(n, n);
  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < n; ++i) {
    order.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return edge_costs(i, x) < edge_costs(i, y); });
    for (std::size_t t = 0; t < order.size() && static_cast<int>(t) < k; ++t) {
      a(i, order[t]) = 1.0;
      a(order[t], i) = 1.0;
    }
  }
  return a;
}

Matrix node_features(const Instance& instance) {
  const int n = graph_size(instance);
  double lat_lo = instance.nodes[0].position.lat, lat_hi = lat_lo;
  double lon_lo = instance.nodes[0].position.lon, lon_hi = lon_lo;
  for (int i = 0; i < n; ++i) {
    const auto& p = instance.nodes[static_cast<std::size_t>(i)].position;
    lat_lo = std::min(lat_lo, p.lat);
    lat_hi = std::max(lat_hi, p.lat);
    lon_lo = std::min(lon_lo, p.lon);
    lon_hi = std::max(lon_hi, p.lon);
  }
  auto scale = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };
  Matrix x(n, 4);
  for (int i = 0; i < n; ++i) {
    const auto& node = instance.nodes[static_cast<std::size_t>(i)];
    x(i, 0) = scale(node.position.lat, lat_lo, lat_hi);
    x(i, 1) = scale(node.position.lon, lon_lo, lon_hi);
    x(i, 2) = static_cast<double>(node.demand) / instance.capacity;
    x(i, 3) = i == 0 ? 1.0 : 0.0;
  }
  return x;
}

Matrix edge_features(const Instance& instance) {
  const int n = graph_size(instance);
  Matrix c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = instance.cost(i, j);
  const double top = c.maxCoeff();
  if (top > 0.0) c /= top;
  return c;
}

ForwardResult forward(const Model& model, const Matrix& features, const Matrix& a_hat,
                      const Matrix& edge_costs, ForwardCache* cache) {
  model.check_dimensions();
  const Eigen::Index n = features.rows();
  if (features.cols() != model.hp.input_dim) {
    throw std::invalid_argument("gcn forward: layer 1 expects " + std::to_string(model.hp.input_dim) +
                                " input features, got " + std::to_string(features.cols()));
  }
  if (a_hat.rows() != n || a_hat.cols() != n || edge_costs.rows() != n || edge_costs.cols() != n) {
    throw std::invalid_argument("gcn forward: adjacency/edge matrices must be " + std::to_string(n) + "x" +
                                std::to_string(n));
  }
  const int layers = model.hp.layers;
  const int h = model.hp.hidden;
  const int e = model.hp.edge_hidden;

  Matrix hcur = features;
  for (int k = 0; k < layers; ++k) {
    Matrix prop = a_hat * hcur;
    Matrix pre = prop * model.weights[static_cast<std::size_t>(k)];
    if (cache) {
      cache->inputs.push_back(hcur);
      cache->propagated.push_back(prop);
      cache->pre.push_back(pre);
    }
    hcur = (k + 1 < layers) ? Matrix(pre.cwiseMax(0.0)) : pre;
  }

  const Matrix we_left = model.edge_weights.leftCols(h);
  const Matrix we_right = model.edge_weights.middleCols(h, h);
  const Vector we_cost = model.edge_weights.col(2 * h);
  Matrix left = hcur * we_left.transpose();
  left.rowwise() += model.edge_bias.transpose();
  const Matrix right = hcur * we_right.transpose();

  Matrix raw = Matrix::Zero(n, n);
  if (cache) cache->edge_pre.assign(static_cast<std::size_t>(n), Matrix());
  for (Eigen::Index i = 0; i < n; ++i) {
    Matrix pre_i(n, e);
    for (Eigen::Index j = 0; j < n; ++j) {
      pre_i.row(j) = left.row(i) + right.row(j) + edge_costs(i, j) * we_cost.transpose();
      if (j != i) raw(i, j) = pre_i.row(j).cwiseMax(0.0).dot(model.edge_out.transpose()) + model.out_bias;
    }
    if (cache) cache->edge_pre[static_cast<std::size_t>(i)] = std::move(pre_i);
  }

  ForwardResult out;
  out.logits = 0.5 * (raw + raw.transpose());
  out.logits.diagonal().setZero();
  out.heatmap = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) out.heatmap(i, j) = sigmoid(out.logits(i, j));
  out.embeddings = hcur;
  if (cache) {
    cache->embeddings = hcur;
    cache->left = left;
    cache->right = right;
    cache->logits = out.logits;
  }
  return out;
}

double default_pos_weight(const Matrix& target) {
  double pos = 0.0, neg = 0.0;
  for (Eigen::Index i = 0; i < target.rows(); ++i)
    for (Eigen::Index j = i + 1; j < target.cols(); ++j) (target(i, j) > 0.5 ? pos : neg) += 1.0;
  return pos > 0.0 ? neg / pos : 1.0;
}

LossResult edge_loss(const Matrix& heatmap, const Matrix& target, double pos_weight) {
  const Eigen::Index n = heatmap.rows();
  LossResult out;
  out.grad_logits = Matrix::Zero(n, n);
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  if (pairs == 0.0) return out;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double p = heatmap(i, j);
      const double t = target(i, j);
      const double pc = std::clamp(p, kProbClip, 1.0 - kProbClip);
      out.loss += -(pos_weight * t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc));
      if (pc == p) out.grad_logits(i, j) = (pos_weight * t * (p - 1.0) + (1.0 - t) * p) / pairs;
    }
  }
  out.loss /= pairs;
  return out;
}

std::vector<double> backward(const Model& model, const Matrix& a_hat, const Matrix& edge_costs,
                             const ForwardCache& cache, const Matrix& grad_logits) {
  const int layers = model.hp.layers;
  const int h = model.hp.hidden;
  const int e = model.hp.edge_hidden;
  const Eigen::Index n = cache.embeddings.rows();

  Matrix d_left = Matrix::Zero(n, e);
  Matrix d_right = Matrix::Zero(n, e);
  Vector d_cost_w = Vector::Zero(e);
  Vector d_out = Vector::Zero(e);
  double d_out_bias = 0.0;

  for (Eigen::Index i = 0; i < n; ++i) {
    const Matrix& pre_i = cache.edge_pre[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      // logit_sym(a, b) = (raw_ab + raw_ba) / 2 and only a < b carries loss
      const double g = 0.5 * (i < j ? grad_logits(i, j) : grad_logits(j, i));
      if (g == 0.0) continue;
      d_out_bias += g;
      const auto pre = pre_i.row(j);
      for (int k = 0; k < e; ++k) {
        if (pre(k) <= 0.0) continue;
        d_out(k) += g * pre(k);
        const double dpre = g * model.edge_out(k);
        d_left(i, k) += dpre;
        d_right(j, k) += dpre;
        d_cost_w(k) += dpre * edge_costs(i, j);
      }
    }
  }

  const Matrix& hk = cache.embeddings;
  Matrix d_edge_w(e, 2 * h + 1);
  d_edge_w.leftCols(h) = d_left.transpose() * hk;
  d_edge_w.middleCols(h, h) = d_right.transpose() * hk;
  d_edge_w.col(2 * h) = d_cost_w;
  const Vector d_edge_b = d_left.colwise().sum().transpose();

  Matrix d_h = d_left * model.edge_weights.leftCols(h) + d_right * model.edge_weights.middleCols(h, h);
  std::vector<Matrix> d_weights(static_cast<std::size_t>(layers));
  for (int k = layers - 1; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    Matrix d_pre = d_h;
    if (k + 1 < layers) d_pre = d_pre.cwiseProduct((cache.pre[ku].array() > 0.0).cast<double>().matrix());
    d_weights[ku] = cache.propagated[ku].transpose() * d_pre;
    const Matrix d_prop = d_pre * model.weights[ku].transpose();
    d_h = a_hat.transpose() * d_prop;
  }

  Model grad = model;
  grad.weights = std::move(d_weights);
  grad.edge_weights = std::move(d_edge_w);
  grad.edge_bias = d_edge_b;
  grad.edge_out = d_out;
  grad.out_bias = d_out_bias;
  return grad.flatten();
}

Example make_training_example(const Instance& instance, const Routes& optimal, const GraphOptions& graph) {
  const int n = graph_size(instance);
  auto graph_id = [&](int id) { return id == instance.depot_end() ? 0 : id; };
  Example ex;
  ex.features = node_features(instance);
  ex.edge_costs = edge_features(instance);
  ex.adjacency = graph.knn ? knn_adjacency(ex.edge_costs, *graph.knn) : complete_adjacency(n);
  ex.a_hat = normalized_adjacency(ex.adjacency);
  ex.target = Matrix::Zero(n, n);
  for (const auto& r : optimal) {
    for (std::size_t k = 1; k < r.nodes.size(); ++k) {
      const int a = graph_id(r.nodes[k - 1]);
      const int b = graph_id(r.nodes[k]);
      if (a == b) continue;
      ex.target(a, b) = 1.0;
      ex.target(b, a) = 1.0;
    }
  }
  ex.pos_weight = default_pos_weight(ex.target);
  return ex;
}

double loss_and_gradient(const Model& model, const std::vector<Example>& examples,
                         std::vector<double>* gradient) {
  if (gradient) gradient->assign(model.parameter_count(), 0.0);
  double total = 0.0;
  for (const auto& ex : examples) {
    ForwardCache cache;
    const auto fwd = forward(model, ex.features, ex.a_hat, ex.edge_costs, gradient ? &cache : nullptr);
    const auto loss = edge_loss(fwd.heatmap, ex.target, ex.pos_weight);
    total += loss.loss;
    if (gradient) {
      const auto g = backward(model, ex.a_hat, ex.edge_costs, cache, loss.grad_logits);
      for (std::size_t k = 0; k < g.size(); ++k) (*gradient)[k] += g[k];
    }
  }
  const double count = examples.empty() ? 1.0 : static_cast<double>(examples.size());
  if (gradient) {
    for (auto& v : *gradient) v /= count;
  }
  return total / count;
}

namespace {

// ReLU on/off pattern of every hidden unit, used to detect probes that cross a kink.
std::vector<bool> activation_pattern(const Model& model, const Example& ex) {
  ForwardCache cache;
  forward(model, ex.features, ex.a_hat, ex.edge_costs, &cache);
  std::vector<bool> pattern;
  for (std::size_t k = 0; k + 1 < cache.pre.size(); ++k) {
    const auto& m = cache.pre[k];
    for (Eigen::Index i = 0; i < m.size(); ++i) pattern.push_back(m.data()[i] > 0.0);
  }
  for (const auto& m : cache.edge_pre) {
    for (Eigen::Index i = 0; i < m.size(); ++i) pattern.push_back(m.data()[i] > 0.0);
  }
  return pattern;
}

std::vector<bool> activation_pattern(const Model& model, const std::vector<Example>& examples) {
  std::vector<bool> all;
  for (const auto& ex : examples) {
    auto p = activation_pattern(model, ex);
    all.insert(all.end(), p.begin(), p.end());
  }
  return all;
}

}  // namespace

GradCheckReport gradient_check(const Model& model, const std::vector<Example>& examples, double step) {
  std::vector<double> analytic;
  loss_and_gradient(model, examples, &analytic);
  const auto base_pattern = activation_pattern(model, examples);
  const std::vector<double> theta = model.flatten();

  GradCheckReport report;
  Model probe = model;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    std::vector<double> shifted = theta;
    shifted[k] = theta[k] + step;
    probe.assign(shifted);
    const double up = loss_and_gradient(probe, examples, nullptr);
    const bool up_same = activation_pattern(probe, examples) == base_pattern;
    shifted[k] = theta[k] - step;
    probe.assign(shifted);
    const double down = loss_and_gradient(probe, examples, nullptr);
    const bool down_same = activation_pattern(probe, examples) == base_pattern;
    if (!up_same || !down_same) {
      ++report.skipped_kinks;
      continue;
    }
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[k];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    report.max_relative_error = std::max(report.max_relative_error, std::abs(a - numeric) / denom);
    ++report.checked;
  }
  return report;
}

}  // namespace paratransit::gcn
