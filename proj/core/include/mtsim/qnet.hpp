#pragma once

#include <span>
#include <string>
#include <vector>

#include "mtsim/rng.hpp"

namespace mtsim {

// Fully connected feed-forward network: rectifier on hidden layers,
// identity on the output layer. Weights are row-major (out x in).
class QNetwork {
 public:
  struct Layer {
    std::vector<double> w;
    std::vector<double> b;
  };

  struct Gradients {
    std::vector<Layer> layers;
  };

  QNetwork() = default;

  static QNetwork zeros(std::vector<int> layer_sizes);
  // Uniform init in +-1/sqrt(fan_in), drawn from the given stream.
  static QNetwork randomized(std::vector<int> layer_sizes, Rng& rng);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  long long step_counter = 0;  // training updates applied so far

  // Throws DomainError on input dimension mismatch.
  std::vector<double> forward(std::span<const double> input) const;

  // Mean squared error over the batch, where only the taken action's output
  // contributes per sample: L = mean_i (Q(s_i)[a_i] - y_i)^2.
  // Backpropagated gradients are written to grads (resized as needed).
  double loss_and_gradients(const std::vector<std::vector<double>>& inputs,
                            const std::vector<int>& actions,
                            const std::vector<double>& targets,
                            Gradients& grads) const;

  void apply_gradients(const Gradients& grads, double learning_rate);

  Gradients zero_gradients() const;

  friend bool operator==(const QNetwork& a, const QNetwork& b) {
    if (a.sizes_ != b.sizes_ || a.step_counter != b.step_counter) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i)
      if (a.layers_[i].w != b.layers_[i].w || a.layers_[i].b != b.layers_[i].b)
        return false;
    return true;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Layer> layers_;
};

// Versioned JSON container: {version, layer_sizes, weights, biases,
// step_counter}. Weight round-trips are value-exact.
std::string serialize_model(const QNetwork& net);
// Throws RuntimeFault naming expected vs. found version, and on any
// truncation or shape inconsistency; never returns a partial model.
QNetwork deserialize_model(const std::string& bytes);

inline constexpr int kModelFormatVersion = 1;

}  // namespace mtsim
