#include "paratransit/gcn.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "paratransit/errors.hpp"
#include "paratransit/random.hpp"

namespace paratransit::gcn {

namespace {

constexpr const char* kCheckpointMagic = "paratransit-gcn";
constexpr int kCheckpointVersion = 1;

std::string parameter_norms(const Model& model) {
  std::ostringstream os;
  for (std::size_t k = 0; k < model.weights.size(); ++k) os << "|W" << k + 1 << "|=" << model.weights[k].norm() << " ";
  os << "|W_e|=" << model.edge_weights.norm() << " |b_e|=" << model.edge_bias.norm()
     << " |v|=" << model.edge_out.norm() << " b=" << model.out_bias;
  return os.str();
}

}  // namespace

TrainResult train(Model model, const std::vector<Example>& dataset, const TrainParams& params) {
  model.check_dimensions();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (params.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");

  Rng rng(params.seed);
  std::vector<double> theta = model.flatten();
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), grad;
  const std::size_t batch = params.batch_size > 0 ? static_cast<std::size_t>(params.batch_size) : dataset.size();

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  long step = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    if (batch < dataset.size()) {
      for (std::size_t i = order.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)));
        std::swap(order[i], order[j]);
      }
    }
    for (std::size_t begin = 0; begin < dataset.size(); begin += batch) {
      double loss = 0.0;
      if (batch >= dataset.size()) {
        loss = loss_and_gradient(model, dataset, &grad);
      } else {
        std::vector<Example> mini;
        for (std::size_t k = begin; k < std::min(begin + batch, dataset.size()); ++k) mini.push_back(dataset[order[k]]);
        loss = loss_and_gradient(model, mini, &grad);
      }
      if (!std::isfinite(loss)) {
        throw std::runtime_error("train: non-finite loss at step " + std::to_string(step) + " (epoch " +
                                 std::to_string(epoch) + "); " + parameter_norms(model));
      }
      result.loss_trace.push_back(loss);
      ++step;
      const double c1 = 1.0 - std::pow(params.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(params.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < theta.size(); ++k) {
        m[k] = params.beta1 * m[k] + (1.0 - params.beta1) * grad[k];
        v[k] = params.beta2 * v[k] + (1.0 - params.beta2) * grad[k] * grad[k];
        theta[k] -= params.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + params.epsilon);
      }
      model.assign(theta);
    }
    if (params.verbose && (epoch % 10 == 0 || epoch + 1 == params.epochs)) {
      std::cerr << "[gcn] epoch " << epoch << " loss " << result.loss_trace.back() << "\n";
    }
  }
  result.model = std::move(model);
  return result;
}

std::string model_to_text(const Model& model) {
  model.check_dimensions();
  std::ostringstream os;
  os << kCheckpointMagic << " " << kCheckpointVersion << "\n";
  os << "input_dim " << model.hp.input_dim << "\n";
  os << "hidden " << model.hp.hidden << "\n";
  os << "layers " << model.hp.layers << "\n";
  os << "edge_hidden " << model.hp.edge_hidden << "\n";
  const auto flat = model.flatten();
  os << "parameters " << flat.size() << "\n";
  char buf[64];
  for (double x : flat) {
    std::snprintf(buf, sizeof buf, "%.17g\n", x);
    os << buf;
  }
  return os.str();
}

Model model_from_text(const std::string& text) {
  std::istringstream is(text);
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != kCheckpointMagic) throw ParseError("checkpoint: bad header");
  if (version != kCheckpointVersion) throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  Hyperparams hp;
  auto field = [&](const char* name, int& out) {
    std::string key;
    if (!(is >> key >> out) || key != name) throw ParseError(std::string("checkpoint: expected field ") + name);
  };
  field("input_dim", hp.input_dim);
  field("hidden", hp.hidden);
  field("layers", hp.layers);
  field("edge_hidden", hp.edge_hidden);
  std::string key;
  std::size_t count = 0;
  if (!(is >> key >> count) || key != "parameters") throw ParseError("checkpoint: expected field parameters");
  Model model = init_model(hp, 0);
  if (count != model.parameter_count()) {
    throw ParseError("checkpoint: parameter count " + std::to_string(count) + " does not match hyperparameters (" +
                     std::to_string(model.parameter_count()) + ")");
  }
  std::vector<double> flat(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::string token;
    if (!(is >> token)) throw ParseError("checkpoint: truncated at parameter " + std::to_string(k));
    char* end = nullptr;
    flat[k] = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw ParseError("checkpoint: bad number at parameter " + std::to_string(k));
  }
  model.assign(flat);
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << model_to_text(model);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_text(buffer.str());
}

}  // namespace paratransit::gcn
