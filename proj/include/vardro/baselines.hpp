#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vardro {

std::vector<double> uniform_weights(std::size_t batch_size);

// Global KL ball around the batch-uniform distribution.
struct KlBudget {
  double rho = 0.1;           // nats
  double tolerance = 1e-10;   // on |KL - rho|
  int max_iterations = 200;
};

double kl_to_uniform(std::span<const double> weights);

// Worst-case reweighting over {q : KL(q || uniform) <= rho}. The optimum is
// the exponential tilt q_i ~ exp(loss_i / temperature); the temperature is
// found by bisection so that the KL constraint is tight. When rho reaches
// log(B / m), with m the number of maximal losses, the mass is split evenly
// over those m samples.
std::vector<double> kl_dro_weights(std::span<const double> losses,
                                   const KlBudget& budget);

}  // namespace vardro
