#pragma once

// Per-sample forward/backward kernels shared by the parallel and serial
// drivers. Private to the library.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "vardro/errors.hpp"
#include "vardro/model_kit.hpp"

namespace vardro::kernels {

struct Layout {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;  // offsets
  std::size_t in = 0, hidden = 0, out = 0;
  bool mlp = false;
  bool bias = true;

  explicit Layout(const Architecture& arch)
      : in(arch.input_dim),
        hidden(arch.hidden_dim),
        out(arch.classes),
        mlp(arch.hidden_dim > 0),
        bias(arch.bias) {
    if (mlp) {
      w1 = 0;
      b1 = w1 + hidden * in;
      w2 = b1 + (bias ? hidden : 0);
      b2 = w2 + out * hidden;
    } else {
      w2 = 0;
      b2 = out * in;
    }
  }
};

struct Workspace {
  std::vector<double> pre;     // hidden pre-activation
  std::vector<double> act;     // hidden activation
  std::vector<double> z;       // logits
  std::vector<double> dz;      // d loss / d logits
  std::vector<double> dact;    // d loss / d hidden pre-activation

  explicit Workspace(const Layout& l)
      : pre(l.hidden), act(l.hidden), z(l.out), dz(l.out), dact(l.hidden) {}
};

inline double activate(Activation a, double x) {
  return a == Activation::kTanh ? std::tanh(x) : (x > 0.0 ? x : 0.0);
}

// Derivative expressed through the pre-activation and activation values.
inline double activate_grad(Activation a, double pre, double act) {
  return a == Activation::kTanh ? 1.0 - act * act : (pre > 0.0 ? 1.0 : 0.0);
}

inline void forward(const ModelParams& m, const Layout& l, std::span<const double> x,
                    Workspace& ws) {
  const double* theta = m.theta.data();
  std::span<const double> features = x;
  if (l.mlp) {
    for (std::size_t h = 0; h < l.hidden; ++h) {
      const double* w = theta + l.w1 + h * l.in;
      double s = l.bias ? theta[l.b1 + h] : 0.0;
      for (std::size_t j = 0; j < l.in; ++j) s += w[j] * x[j];
      ws.pre[h] = s;
      ws.act[h] = activate(m.arch.activation, s);
    }
    features = ws.act;
  }
  const std::size_t width = features.size();
  for (std::size_t k = 0; k < l.out; ++k) {
    const double* w = theta + l.w2 + k * width;
    double s = l.bias ? theta[l.b2 + k] : 0.0;
    for (std::size_t j = 0; j < width; ++j) s += w[j] * features[j];
    ws.z[k] = s;
  }
}

// Cross-entropy of softmax(ws.z) against target; leaves softmax in ws.dz.
inline double loss_from_logits(std::span<const double> target, Workspace& ws) {
  const double zmax = *std::max_element(ws.z.begin(), ws.z.end());
  if (!std::isfinite(zmax)) throw NonFiniteError("non-finite logits");
  double norm = 0.0;
  for (std::size_t k = 0; k < ws.z.size(); ++k) {
    ws.dz[k] = std::exp(ws.z[k] - zmax);
    norm += ws.dz[k];
  }
  const double lse = zmax + std::log(norm);
  double loss = 0.0;
  for (std::size_t k = 0; k < ws.z.size(); ++k) {
    ws.dz[k] /= norm;
    loss += target[k] * (lse - ws.z[k]);
  }
  if (!std::isfinite(loss)) throw NonFiniteError("non-finite loss");
  return loss;
}

inline double sample_loss(const ModelParams& m, const Layout& l,
                          std::span<const double> x, std::span<const double> target,
                          Workspace& ws) {
  forward(m, l, x, ws);
  return loss_from_logits(target, ws);
}

// Writes the full parameter gradient of one sample into grad.
inline double sample_loss_grad(const ModelParams& m, const Layout& l,
                               std::span<const double> x,
                               std::span<const double> target, Workspace& ws,
                               std::span<double> grad) {
  const double loss = sample_loss(m, l, x, target, ws);
  double target_mass = 0.0;
  for (double t : target) target_mass += t;
  for (std::size_t k = 0; k < l.out; ++k) ws.dz[k] = target_mass * ws.dz[k] - target[k];

  std::fill(grad.begin(), grad.end(), 0.0);
  std::span<const double> features = l.mlp ? std::span<const double>(ws.act) : x;
  const std::size_t width = features.size();
  for (std::size_t k = 0; k < l.out; ++k) {
    double* g = grad.data() + l.w2 + k * width;
    for (std::size_t j = 0; j < width; ++j) g[j] = ws.dz[k] * features[j];
    if (l.bias) grad[l.b2 + k] = ws.dz[k];
  }
  if (l.mlp) {
    const double* theta = m.theta.data();
    for (std::size_t h = 0; h < l.hidden; ++h) {
      double back = 0.0;
      for (std::size_t k = 0; k < l.out; ++k) back += theta[l.w2 + k * l.hidden + h] * ws.dz[k];
      ws.dact[h] = back * activate_grad(m.arch.activation, ws.pre[h], ws.act[h]);
    }
    for (std::size_t h = 0; h < l.hidden; ++h) {
      double* g = grad.data() + l.w1 + h * l.in;
      for (std::size_t j = 0; j < l.in; ++j) g[j] = ws.dact[h] * x[j];
      if (l.bias) grad[l.b1 + h] = ws.dact[h];
    }
  }
  return loss;
}

inline void check_batch(const ModelParams& m, const Matrix& inputs, const Matrix& targets) {
  m.validate();
  if (inputs.cols != m.arch.input_dim) {
    throw DimensionError("input width does not match the architecture");
  }
  if (targets.cols != m.arch.classes) {
    throw DimensionError("target width does not match the class count");
  }
  if (inputs.rows != targets.rows) {
    throw DimensionError("inputs and targets differ in row count");
  }
}

inline void check_step(const ModelParams& m, const Matrix& grads,
                       std::span<const double> weights) {
  if (grads.rows != weights.size()) {
    throw DimensionError("gradient rows and weights differ in length");
  }
  if (grads.cols != m.theta.size()) {
    throw DimensionError("gradient width does not match the parameter count");
  }
}

inline void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NonFiniteError(std::string("non-finite ") + what);
  }
}

}  // namespace vardro::kernels
