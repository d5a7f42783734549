#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vardro {

// Per-sample losses of one mini-batch. Entries must be finite.
using LossVector = std::vector<double>;
// Per-sample radii eps_i >= 0.
using BudgetVector = std::vector<double>;
// Adversarial distribution over the batch.
using WeightVector = std::vector<double>;

// Per-sample box around the batch-uniform base measure:
//   base * exp(-eps_i) <= q_i <= base * exp(eps_i),  base = 1/B.
struct WeightBox {
  std::vector<double> lower;
  std::vector<double> upper;
  double base = 0.0;

  std::size_t size() const { return lower.size(); }
};

// Tolerances of the WeightVector contract.
inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kBoxTolerance = 1e-12;

// Largest batch accepted by lp_oracle; enumeration is O(B * 2^B).
inline constexpr std::size_t kOracleMaxBatch = 12;

WeightBox box_bounds(std::span<const double> budgets, std::size_t batch_size);

// Exact maximizer of sum_i q_i * loss_i over simplex intersected with the
// box. Starts every weight at its lower bound and pours the residual mass
// into samples in descending-loss order (ties: ascending index).
WeightVector water_fill(std::span<const double> losses,
                        std::span<const double> budgets);

// Same as water_fill against a prebuilt box.
WeightVector water_fill(std::span<const double> losses, const WeightBox& box);

double robust_objective(std::span<const double> losses,
                        std::span<const double> weights);

// Exhaustive vertex enumeration of the same LP. Test oracle only.
WeightVector lp_oracle(std::span<const double> losses, const WeightBox& box);

// Number of coordinates strictly inside (lower + tol, upper - tol).
std::size_t count_interior(std::span<const double> weights,
                           const WeightBox& box, double tol = 1e-12);

// Throws if weights violate the simplex or box tolerance.
void check_weights(std::span<const double> weights, const WeightBox& box);

}  // namespace vardro
