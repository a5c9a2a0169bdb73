#include "mtsim/qnet.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "mtsim/errors.hpp"

namespace mtsim {

QNetwork QNetwork::zeros(std::vector<int> layer_sizes) {
  if (layer_sizes.size() < 2)
    throw DomainError("QNetwork needs at least input and output layers");
  QNetwork net;
  net.sizes_ = std::move(layer_sizes);
  for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
    Layer layer;
    layer.w.assign(static_cast<std::size_t>(net.sizes_[l + 1]) * net.sizes_[l], 0.0);
    layer.b.assign(net.sizes_[l + 1], 0.0);
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

QNetwork QNetwork::randomized(std::vector<int> layer_sizes, Rng& rng) {
  QNetwork net = zeros(std::move(layer_sizes));
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    double scale = 1.0 / std::sqrt(static_cast<double>(net.sizes_[l]));
    for (double& w : net.layers_[l].w) w = rng.uniform_double(-scale, scale);
    for (double& b : net.layers_[l].b) b = rng.uniform_double(-scale, scale);
  }
  return net;
}

std::vector<double> QNetwork::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_size())
    throw DomainError("QNetwork::forward: input size " +
                      std::to_string(input.size()) + ", expected " +
                      std::to_string(input_size()));
  std::vector<double> cur(input.begin(), input.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const int out_n = sizes_[l + 1];
    const int in_n = sizes_[l];
    std::vector<double> next(out_n);
    const bool hidden = l + 1 < layers_.size();
    for (int o = 0; o < out_n; ++o) {
      double acc = layer.b[o];
      const double* row = layer.w.data() + static_cast<std::size_t>(o) * in_n;
      for (int i = 0; i < in_n; ++i) acc += row[i] * cur[i];
      next[o] = hidden && acc < 0.0 ? 0.0 : acc;
    }
    cur = std::move(next);
  }
  return cur;
}

QNetwork::Gradients QNetwork::zero_gradients() const {
  Gradients g;
  for (const Layer& layer : layers_) {
    Layer zero;
    zero.w.assign(layer.w.size(), 0.0);
    zero.b.assign(layer.b.size(), 0.0);
    g.layers.push_back(std::move(zero));
  }
  return g;
}

double QNetwork::loss_and_gradients(const std::vector<std::vector<double>>& inputs,
                                    const std::vector<int>& actions,
                                    const std::vector<double>& targets,
                                    Gradients& grads) const {
  if (inputs.empty() || inputs.size() != actions.size() ||
      inputs.size() != targets.size())
    throw DomainError("loss_and_gradients: batch arrays must be non-empty and equal-sized");

  grads = zero_gradients();
  const std::size_t batch = inputs.size();
  const std::size_t n_layers = layers_.size();
  double loss = 0.0;

  std::vector<std::vector<double>> act(n_layers + 1);  // post-activation per layer
  for (std::size_t s = 0; s < batch; ++s) {
    if (static_cast<int>(inputs[s].size()) != input_size())
      throw DomainError("loss_and_gradients: input size mismatch in batch");
    act[0] = inputs[s];
    for (std::size_t l = 0; l < n_layers; ++l) {
      const Layer& layer = layers_[l];
      const int out_n = sizes_[l + 1];
      const int in_n = sizes_[l];
      act[l + 1].assign(out_n, 0.0);
      const bool hidden = l + 1 < n_layers;
      for (int o = 0; o < out_n; ++o) {
        double acc = layer.b[o];
        const double* row = layer.w.data() + static_cast<std::size_t>(o) * in_n;
        for (int i = 0; i < in_n; ++i) acc += row[i] * act[l][i];
        act[l + 1][o] = hidden && acc < 0.0 ? 0.0 : acc;
      }
    }

    const int a = actions[s];
    if (a < 0 || a >= output_size())
      throw DomainError("loss_and_gradients: action index out of range");
    const double err = act[n_layers][a] - targets[s];
    loss += err * err;

    // Backward pass: only the taken output carries error.
    std::vector<double> delta(output_size(), 0.0);
    delta[a] = 2.0 * err / static_cast<double>(batch);
    for (std::size_t l = n_layers; l-- > 0;) {
      const Layer& layer = layers_[l];
      Layer& g = grads.layers[l];
      const int out_n = sizes_[l + 1];
      const int in_n = sizes_[l];
      std::vector<double> delta_prev(in_n, 0.0);
      for (int o = 0; o < out_n; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        g.b[o] += d;
        double* grow = g.w.data() + static_cast<std::size_t>(o) * in_n;
        const double* wrow = layer.w.data() + static_cast<std::size_t>(o) * in_n;
        for (int i = 0; i < in_n; ++i) {
          grow[i] += d * act[l][i];
          delta_prev[i] += d * wrow[i];
        }
      }
      if (l > 0) {
        // Rectifier derivative of the previous hidden layer.
        for (int i = 0; i < in_n; ++i)
          if (act[l][i] <= 0.0) delta_prev[i] = 0.0;
      }
      delta = std::move(delta_prev);
    }
  }
  return loss / static_cast<double>(batch);
}

void QNetwork::apply_gradients(const Gradients& grads, double learning_rate) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    const Layer& g = grads.layers[l];
    for (std::size_t i = 0; i < layer.w.size(); ++i)
      layer.w[i] -= learning_rate * g.w[i];
    for (std::size_t i = 0; i < layer.b.size(); ++i)
      layer.b[i] -= learning_rate * g.b[i];
  }
  ++step_counter;
}

std::string serialize_model(const QNetwork& net) {
  nlohmann::json j;
  j["version"] = kModelFormatVersion;
  j["layer_sizes"] = net.layer_sizes();
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (const QNetwork::Layer& layer : net.layers()) {
    weights.push_back(layer.w);
    biases.push_back(layer.b);
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  j["step_counter"] = net.step_counter;
  return j.dump();
}

QNetwork deserialize_model(const std::string& bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFault(std::string("model load error: malformed JSON: ") + e.what());
  }
  if (!j.contains("version") || !j["version"].is_number_integer())
    throw RuntimeFault("model load error: missing version field");
  const int version = j["version"].get<int>();
  if (version != kModelFormatVersion)
    throw RuntimeFault("model load error: expected version " +
                       std::to_string(kModelFormatVersion) + ", found " +
                       std::to_string(version));
  for (const char* key : {"layer_sizes", "weights", "biases", "step_counter"})
    if (!j.contains(key))
      throw RuntimeFault(std::string("model load error: missing field '") + key + "'");

  std::vector<int> sizes = j["layer_sizes"].get<std::vector<int>>();
  QNetwork net = QNetwork::zeros(sizes);
  const auto& weights = j["weights"];
  const auto& biases = j["biases"];
  if (weights.size() != net.layers().size() || biases.size() != net.layers().size())
    throw RuntimeFault("model load error: layer count mismatch");
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    std::vector<double> w = weights[l].get<std::vector<double>>();
    std::vector<double> b = biases[l].get<std::vector<double>>();
    if (w.size() != net.layers()[l].w.size() || b.size() != net.layers()[l].b.size())
      throw RuntimeFault("model load error: layer " + std::to_string(l) +
                         " has truncated or oversized arrays");
    for (double x : w)
      if (!std::isfinite(x))
        throw RuntimeFault("model load error: non-finite weight");
    net.layers()[l].w = std::move(w);
    net.layers()[l].b = std::move(b);
  }
  net.step_counter = j["step_counter"].get<long long>();
  return net;
}

}  // namespace mtsim
