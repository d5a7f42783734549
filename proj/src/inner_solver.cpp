#include "vardro/inner_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "vardro/errors.hpp"

namespace vardro {

namespace {

void require_finite_losses(std::span<const double> losses) {
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!std::isfinite(losses[i])) {
      throw NonFiniteError("loss " + std::to_string(i) + " is not finite");
    }
  }
}

// Descending loss, ties by ascending index.
std::vector<std::size_t> fill_order(std::span<const double> losses) {
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });
  return order;
}

}  // namespace

WeightBox box_bounds(std::span<const double> budgets, std::size_t batch_size) {
  if (batch_size == 0) {
    throw InvalidBudgetError("batch size must be positive");
  }
  if (budgets.size() != batch_size) {
    throw InvalidBudgetError("budget length " + std::to_string(budgets.size()) +
                             " does not match batch size " +
                             std::to_string(batch_size));
  }
  WeightBox box;
  box.base = 1.0 / static_cast<double>(batch_size);
  box.lower.resize(batch_size);
  box.upper.resize(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const double eps = budgets[i];
    if (!(eps >= 0.0) || !std::isfinite(eps)) {
      throw InvalidBudgetError("budget " + std::to_string(i) +
                               " must be finite and nonnegative");
    }
    // eps == 0 must give the base weight bit-exactly.
    if (eps == 0.0) {
      box.lower[i] = box.base;
      box.upper[i] = box.base;
    } else {
      box.lower[i] = std::exp(-eps) / static_cast<double>(batch_size);
      box.upper[i] = std::exp(eps) / static_cast<double>(batch_size);
    }
  }
  return box;
}

WeightVector water_fill(std::span<const double> losses,
                        std::span<const double> budgets) {
  if (losses.size() != budgets.size()) {
    throw InvalidBudgetError("budget length " + std::to_string(budgets.size()) +
                             " does not match loss length " +
                             std::to_string(losses.size()));
  }
  return water_fill(losses, box_bounds(budgets, losses.size()));
}

WeightVector water_fill(std::span<const double> losses, const WeightBox& box) {
  if (losses.size() != box.size() || losses.empty()) {
    throw InvalidBudgetError("loss and box lengths differ or are empty");
  }
  require_finite_losses(losses);

  WeightVector q(box.lower.begin(), box.lower.end());
  double residual = 1.0 - std::accumulate(q.begin(), q.end(), 0.0);

  const auto order = fill_order(losses);
  std::size_t pivot = order.front();
  for (std::size_t idx : order) {
    if (residual <= 0.0) break;
    const double delta = std::min(box.upper[idx] - box.lower[idx], residual);
    q[idx] += delta;
    residual -= delta;
    pivot = idx;
  }

  // Rounding drift goes into the last-filled coordinate, clamped to its box.
  const double drift = 1.0 - std::accumulate(q.begin(), q.end(), 0.0);
  if (drift != 0.0) {
    q[pivot] = std::clamp(q[pivot] + drift, box.lower[pivot], box.upper[pivot]);
  }
  check_weights(q, box);
  return q;
}

double robust_objective(std::span<const double> losses,
                        std::span<const double> weights) {
  if (losses.size() != weights.size()) {
    throw DimensionError("losses and weights differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) total += weights[i] * losses[i];
  return total;
}

WeightVector lp_oracle(std::span<const double> losses, const WeightBox& box) {
  const std::size_t n = losses.size();
  if (n == 0 || n != box.size()) {
    throw DimensionError("loss and box lengths differ or are empty");
  }
  if (n > kOracleMaxBatch) {
    throw InvalidArgumentError("lp_oracle supports at most " +
                               std::to_string(kOracleMaxBatch) + " samples");
  }
  require_finite_losses(losses);

  constexpr double kFeasTol = 1e-12;
  const auto order = fill_order(losses);
  double scale = 1.0;
  for (double l : losses) scale = std::max(scale, std::abs(l));
  const double objective_tie = 1e-13 * scale;

  WeightVector best;
  double best_value = -std::numeric_limits<double>::infinity();
  WeightVector candidate(n);

  // Candidate is preferred on equal objective when it is lexicographically
  // larger in fill order; this matches the greedy's canonical solution.
  auto consider = [&](const WeightVector& q) {
    const double value = robust_objective(losses, q);
    bool take = false;
    if (best.empty() || value > best_value + objective_tie) {
      take = true;
    } else if (value >= best_value - objective_tie) {
      for (std::size_t idx : order) {
        if (q[idx] > best[idx] + kFeasTol) {
          take = true;
          break;
        }
        if (q[idx] < best[idx] - kFeasTol) break;
      }
    }
    if (take) {
      best = q;
      best_value = value;
    }
  };

  const std::size_t patterns = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      candidate[i] = (mask >> i) & 1U ? box.upper[i] : box.lower[i];
      sum += candidate[i];
    }
    // Pure vertex: every coordinate at a bound.
    if (std::abs(sum - 1.0) <= kFeasTol) consider(candidate);
    // One pivot absorbs the residual.
    for (std::size_t p = 0; p < n; ++p) {
      const double rest = sum - candidate[p];
      const double value = 1.0 - rest;
      if (value < box.lower[p] - kFeasTol || value > box.upper[p] + kFeasTol) continue;
      const double saved = candidate[p];
      candidate[p] = std::clamp(value, box.lower[p], box.upper[p]);
      consider(candidate);
      candidate[p] = saved;
    }
  }
  if (best.empty()) {
    throw Error("lp_oracle found no feasible point; box is infeasible");
  }
  return best;
}

std::size_t count_interior(std::span<const double> weights, const WeightBox& box,
                           double tol) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > box.lower[i] + tol && weights[i] < box.upper[i] - tol) ++count;
  }
  return count;
}

void check_weights(std::span<const double> weights, const WeightBox& box) {
  if (weights.size() != box.size()) {
    throw DimensionError("weights and box differ in length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < box.lower[i] - kBoxTolerance ||
        weights[i] > box.upper[i] + kBoxTolerance) {
      throw Error("weight " + std::to_string(i) + " violates its box");
    }
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw Error("weights do not sum to one");
  }
}

}  // namespace vardro
