#include "vardro/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vardro/errors.hpp"

namespace vardro {

namespace {

// Tilted distribution at the given temperature, shifted by the max loss.
std::vector<double> tilt(std::span<const double> losses, double max_loss,
                         double temperature) {
  std::vector<double> q(losses.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    q[i] = std::exp((losses[i] - max_loss) / temperature);
    norm += q[i];
  }
  for (double& v : q) v /= norm;
  return q;
}

}  // namespace

std::vector<double> uniform_weights(std::size_t batch_size) {
  if (batch_size == 0) throw InvalidArgumentError("batch size must be positive");
  return std::vector<double>(batch_size, 1.0 / static_cast<double>(batch_size));
}

double kl_to_uniform(std::span<const double> weights) {
  const double n = static_cast<double>(weights.size());
  double kl = 0.0;
  for (double q : weights) {
    if (q > 0.0) kl += q * std::log(n * q);
  }
  return std::max(kl, 0.0);
}

std::vector<double> kl_dro_weights(std::span<const double> losses,
                                   const KlBudget& budget) {
  if (losses.empty()) throw InvalidArgumentError("empty loss vector");
  if (!(budget.rho >= 0.0) || !std::isfinite(budget.rho)) {
    throw InvalidArgumentError("rho must be finite and nonnegative");
  }
  if (!(budget.tolerance > 0.0) || budget.max_iterations <= 0) {
    throw InvalidArgumentError("bisection tolerance and iteration cap must be positive");
  }
  for (double l : losses) {
    if (!std::isfinite(l)) throw NonFiniteError("non-finite loss");
  }

  const std::size_t n = losses.size();
  const auto [lo_it, hi_it] = std::minmax_element(losses.begin(), losses.end());
  const double max_loss = *hi_it;
  const double spread = max_loss - *lo_it;
  if (budget.rho == 0.0 || spread == 0.0) return uniform_weights(n);

  const auto maximal = static_cast<std::size_t>(
      std::count(losses.begin(), losses.end(), max_loss));
  const double limit_kl =
      std::log(static_cast<double>(n) / static_cast<double>(maximal));
  if (budget.rho >= limit_kl) {
    std::vector<double> q(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (losses[i] == max_loss) q[i] = 1.0 / static_cast<double>(maximal);
    }
    return q;
  }

  // KL of the tilt decreases monotonically in the temperature. Bisect in
  // log-temperature, which keeps the bracket well conditioned over its
  // twelve decades.
  double log_cold = std::log(1e-6 * spread);
  double log_hot = std::log(1e6 * spread);
  auto kl_at = [&](double log_t) {
    return kl_to_uniform(tilt(losses, max_loss, std::exp(log_t)));
  };
  // Widen the bracket until it straddles rho.
  for (int i = 0; i < 64 && kl_at(log_cold) < budget.rho; ++i) log_cold -= std::log(10.0);
  for (int i = 0; i < 64 && kl_at(log_hot) > budget.rho; ++i) log_hot += std::log(10.0);

  for (int iter = 0; iter < budget.max_iterations; ++iter) {
    const double mid = 0.5 * (log_cold + log_hot);
    auto q = tilt(losses, max_loss, std::exp(mid));
    const double kl = kl_to_uniform(q);
    if (std::abs(kl - budget.rho) <= budget.tolerance) return q;
    if (kl > budget.rho) {
      log_cold = mid;
    } else {
      log_hot = mid;
    }
  }
  throw ConvergenceError("KL-DRO bisection did not reach tolerance " +
                         std::to_string(budget.tolerance) + " within " +
                         std::to_string(budget.max_iterations) + " iterations");
}

}  // namespace vardro
