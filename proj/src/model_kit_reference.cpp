#include "model_kernels.hpp"
#include "vardro/model_kit.hpp"

namespace vardro::reference {

std::vector<double> per_sample_losses(const ModelParams& model, const Matrix& inputs,
                                      const Matrix& targets) {
  kernels::check_batch(model, inputs, targets);
  const kernels::Layout l(model.arch);
  kernels::Workspace ws(l);
  std::vector<double> losses(inputs.rows);
  for (std::size_t i = 0; i < inputs.rows; ++i) {
    losses[i] = kernels::sample_loss(model, l, inputs.row(i), targets.row(i), ws);
  }
  return losses;
}

Matrix per_sample_gradients(const ModelParams& model, const Matrix& inputs,
                            const Matrix& targets) {
  kernels::check_batch(model, inputs, targets);
  const kernels::Layout l(model.arch);
  kernels::Workspace ws(l);
  Matrix grads(inputs.rows, model.theta.size());
  for (std::size_t i = 0; i < inputs.rows; ++i) {
    kernels::sample_loss_grad(model, l, inputs.row(i), targets.row(i), ws, grads.row(i));
  }
  kernels::check_finite(grads.data, "gradient");
  return grads;
}

ModelParams weighted_step(const ModelParams& model, const Matrix& grads,
                          std::span<const double> weights, double lr) {
  kernels::check_step(model, grads, weights);
  ModelParams next = model;
  const std::size_t p = model.theta.size();
  for (std::size_t j = 0; j < p; ++j) {
    double direction = 0.0;
    for (std::size_t i = 0; i < grads.rows; ++i) direction += weights[i] * grads(i, j);
    next.theta[j] -= lr * direction;
  }
  kernels::check_finite(next.theta, "parameter after step");
  return next;
}

}  // namespace vardro::reference
