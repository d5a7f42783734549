#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vardro/matrix.hpp"

namespace vardro {

enum class Activation { kTanh, kRelu };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

// hidden_dim == 0 selects the linear softmax model; otherwise one hidden
// layer of the given width.
struct Architecture {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t classes = 2;
  Activation activation = Activation::kTanh;
  bool bias = true;

  std::size_t parameter_count() const;
  void validate() const;
  bool operator==(const Architecture&) const = default;
};

// Flat parameter layout: [W1 (H x d), b1 (H), W2 (K x H), b2 (K)] for the
// MLP and [W (K x d), b (K)] for the linear model. Biases are omitted when
// arch.bias is false.
struct ModelParams {
  Architecture arch;
  std::vector<double> theta;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelParams from_json(const nlohmann::json& doc);
  bool operator==(const ModelParams&) const = default;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.
ModelParams init_params(const Architecture& arch, std::uint64_t seed);

inline constexpr double kDefaultLabelSmoothing = 0.1;

// (1 - alpha) * onehot(label) + alpha / K.
std::vector<double> smooth_labels(int label, std::size_t classes, double alpha);

// One smoothed target per row.
Matrix smooth_label_matrix(std::span<const int> labels, std::size_t classes,
                           double alpha);

// Row i = logits for input row i.
Matrix logits(const ModelParams& model, const Matrix& inputs);

// Softmax of each row, computed from max-shifted logits.
Matrix softmax_rows(const Matrix& logits);

std::vector<int> predict(const ModelParams& model, const Matrix& inputs);

// Cross-entropy against each target row.
std::vector<double> per_sample_losses(const ModelParams& model, const Matrix& inputs,
                                      const Matrix& targets);

// Row i = gradient of loss_i with respect to theta.
Matrix per_sample_gradients(const ModelParams& model, const Matrix& inputs,
                            const Matrix& targets);

// Single pass producing both; losses are written to `losses`.
Matrix per_sample_losses_and_gradients(const ModelParams& model, const Matrix& inputs,
                                       const Matrix& targets,
                                       std::vector<double>& losses);

// theta' = theta - lr * sum_i weights_i * grads_i. The per-coordinate sum
// runs over samples in index order.
ModelParams weighted_step(const ModelParams& model, const Matrix& grads,
                          std::span<const double> weights, double lr);

// Serial implementations of the parallel kernels above. Identical results.
namespace reference {

std::vector<double> per_sample_losses(const ModelParams& model, const Matrix& inputs,
                                      const Matrix& targets);
Matrix per_sample_gradients(const ModelParams& model, const Matrix& inputs,
                            const Matrix& targets);
ModelParams weighted_step(const ModelParams& model, const Matrix& grads,
                          std::span<const double> weights, double lr);

}  // namespace reference

}  // namespace vardro
