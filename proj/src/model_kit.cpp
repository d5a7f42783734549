#include "vardro/model_kit.hpp"

#include <cmath>
#include <exception>
#include <random>

#include "model_kernels.hpp"

namespace vardro {

namespace {

// Runs body(i) for i in [0, n) across OpenMP threads and rethrows the first
// exception on the calling thread.
template <typename Setup, typename Body>
void parallel_rows(std::size_t n, Setup setup, Body body) {
  std::exception_ptr failure;
#pragma omp parallel
  {
    auto state = setup();
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      try {
        body(state, static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(vardro_parallel_rows)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::string to_string(Activation act) {
  return act == Activation::kTanh ? "tanh" : "relu";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw InvalidArgumentError("unknown activation '" + name + "'");
}

std::size_t Architecture::parameter_count() const {
  const std::size_t b = bias ? 1 : 0;
  if (hidden_dim == 0) return classes * input_dim + b * classes;
  return hidden_dim * input_dim + b * hidden_dim + classes * hidden_dim + b * classes;
}

void Architecture::validate() const {
  if (input_dim == 0) throw InvalidArgumentError("input_dim must be positive");
  if (classes < 2) throw InvalidArgumentError("at least two classes are required");
}

void ModelParams::validate() const {
  arch.validate();
  if (theta.size() != arch.parameter_count()) {
    throw DimensionError("parameter count does not match the architecture");
  }
  kernels::check_finite(theta, "parameter");
}

nlohmann::json ModelParams::to_json() const {
  return {{"architecture",
           {{"input_dim", arch.input_dim},
            {"hidden_dim", arch.hidden_dim},
            {"classes", arch.classes},
            {"activation", to_string(arch.activation)},
            {"bias", arch.bias}}},
          {"parameters", theta}};
}

ModelParams ModelParams::from_json(const nlohmann::json& doc) {
  ModelParams m;
  const auto& a = doc.at("architecture");
  m.arch.input_dim = a.at("input_dim").get<std::size_t>();
  m.arch.hidden_dim = a.at("hidden_dim").get<std::size_t>();
  m.arch.classes = a.at("classes").get<std::size_t>();
  m.arch.activation = activation_from_string(a.at("activation").get<std::string>());
  m.arch.bias = a.at("bias").get<bool>();
  m.theta = doc.at("parameters").get<std::vector<double>>();
  m.validate();
  return m;
}

ModelParams init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  ModelParams m{arch, std::vector<double>(arch.parameter_count())};
  const kernels::Layout l(arch);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t begin, std::size_t count, std::size_t fan_in) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-s, s);
    for (std::size_t i = 0; i < count; ++i) m.theta[begin + i] = dist(rng);
  };
  if (l.mlp) {
    fill(l.w1, l.hidden * l.in, l.in);
    if (l.bias) fill(l.b1, l.hidden, l.in);
    fill(l.w2, l.out * l.hidden, l.hidden);
    if (l.bias) fill(l.b2, l.out, l.hidden);
  } else {
    fill(l.w2, l.out * l.in, l.in);
    if (l.bias) fill(l.b2, l.out, l.in);
  }
  return m;
}

std::vector<double> smooth_labels(int label, std::size_t classes, double alpha) {
  if (classes == 0 || label < 0 || static_cast<std::size_t>(label) >= classes) {
    throw InvalidArgumentError("label " + std::to_string(label) + " out of range");
  }
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw InvalidArgumentError("label smoothing must lie in [0, 1)");
  }
  const double off = alpha / static_cast<double>(classes);
  std::vector<double> y(classes, off);
  y[static_cast<std::size_t>(label)] = (1.0 - alpha) + off;
  return y;
}

Matrix smooth_label_matrix(std::span<const int> labels, std::size_t classes,
                           double alpha) {
  Matrix out(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = smooth_labels(labels[i], classes, alpha);
    std::copy(y.begin(), y.end(), out.row(i).begin());
  }
  return out;
}

Matrix logits(const ModelParams& model, const Matrix& inputs) {
  model.validate();
  if (inputs.cols != model.arch.input_dim) {
    throw DimensionError("input width does not match the architecture");
  }
  const kernels::Layout l(model.arch);
  Matrix out(inputs.rows, l.out);
  parallel_rows(
      inputs.rows, [&] { return kernels::Workspace(l); },
      [&](kernels::Workspace& ws, std::size_t i) {
        kernels::forward(model, l, inputs.row(i), ws);
        std::copy(ws.z.begin(), ws.z.end(), out.row(i).begin());
      });
  return out;
}

Matrix softmax_rows(const Matrix& z) {
  Matrix p(z.rows, z.cols);
  for (std::size_t i = 0; i < z.rows; ++i) {
    const auto in = z.row(i);
    auto out = p.row(i);
    const double m = *std::max_element(in.begin(), in.end());
    double norm = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) {
      out[k] = std::exp(in[k] - m);
      norm += out[k];
    }
    for (double& v : out) v /= norm;
  }
  return p;
}

std::vector<int> predict(const ModelParams& model, const Matrix& inputs) {
  const Matrix z = logits(model, inputs);
  std::vector<int> out(z.rows);
  for (std::size_t i = 0; i < z.rows; ++i) {
    const auto r = z.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

std::vector<double> per_sample_losses(const ModelParams& model, const Matrix& inputs,
                                      const Matrix& targets) {
  kernels::check_batch(model, inputs, targets);
  const kernels::Layout l(model.arch);
  std::vector<double> losses(inputs.rows);
  parallel_rows(
      inputs.rows, [&] { return kernels::Workspace(l); },
      [&](kernels::Workspace& ws, std::size_t i) {
        losses[i] = kernels::sample_loss(model, l, inputs.row(i), targets.row(i), ws);
      });
  return losses;
}

Matrix per_sample_gradients(const ModelParams& model, const Matrix& inputs,
                            const Matrix& targets) {
  std::vector<double> unused;
  return per_sample_losses_and_gradients(model, inputs, targets, unused);
}

Matrix per_sample_losses_and_gradients(const ModelParams& model, const Matrix& inputs,
                                       const Matrix& targets,
                                       std::vector<double>& losses) {
  kernels::check_batch(model, inputs, targets);
  const kernels::Layout l(model.arch);
  Matrix grads(inputs.rows, model.theta.size());
  losses.assign(inputs.rows, 0.0);
  parallel_rows(
      inputs.rows, [&] { return kernels::Workspace(l); },
      [&](kernels::Workspace& ws, std::size_t i) {
        losses[i] = kernels::sample_loss_grad(model, l, inputs.row(i), targets.row(i),
                                              ws, grads.row(i));
      });
  kernels::check_finite(grads.data, "gradient");
  return grads;
}

ModelParams weighted_step(const ModelParams& model, const Matrix& grads,
                          std::span<const double> weights, double lr) {
  kernels::check_step(model, grads, weights);
  ModelParams next = model;
  const std::size_t p = model.theta.size();
  const std::size_t b = grads.rows;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(p); ++j) {
    double direction = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      direction += weights[i] * grads.data[i * p + static_cast<std::size_t>(j)];
    }
    next.theta[static_cast<std::size_t>(j)] -= lr * direction;
  }
  kernels::check_finite(next.theta, "parameter after step");
  return next;
}

}  // namespace vardro
