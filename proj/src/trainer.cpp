#include "vardro/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "vardro/baselines.hpp"
#include "vardro/errors.hpp"

namespace vardro {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;

struct Batch {
  Matrix inputs;
  Matrix targets;
  std::vector<SampleId> ids;
};

Batch gather(const TrainingView& data, const Matrix& all_targets,
             std::span<const std::size_t> rows) {
  Batch b{Matrix(rows.size(), data.dim()), Matrix(rows.size(), data.classes()), {}};
  b.ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto x = data.features(rows[r]);
    std::copy(x.begin(), x.end(), b.inputs.row(r).begin());
    const auto t = all_targets.row(rows[r]);
    std::copy(t.begin(), t.end(), b.targets.row(r).begin());
    b.ids.push_back(data.id(rows[r]));
  }
  return b;
}

bool hits_upper(std::span<const double> weights, std::span<const double> budgets) {
  const WeightBox box = box_bounds(budgets, weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (box.upper[i] > box.lower[i] && weights[i] >= box.upper[i] - kBoxTolerance) return true;
  }
  return false;
}

// Momentum / weight-decay variant of the weighted step.
void momentum_step(ModelParams& model, const Matrix& grads, std::span<const double> weights,
                   const ExperimentConfig& config, std::vector<double>& velocity) {
  const std::size_t p = model.theta.size();
  for (std::size_t j = 0; j < p; ++j) {
    double direction = config.weight_decay * model.theta[j];
    for (std::size_t i = 0; i < grads.rows; ++i) direction += weights[i] * grads(i, j);
    velocity[j] = config.momentum * velocity[j] + direction;
    model.theta[j] -= config.learning_rate * velocity[j];
  }
}

}  // namespace

TrainResult train(const ExperimentConfig& config, const TrainingView& data,
                  const TrainOptions& options) {
  config.validate();
  if (data.size() == 0) throw InvalidArgumentError("training set is empty");
  const Architecture arch = config.architecture();
  if (data.dim() != arch.input_dim || data.classes() != arch.classes) {
    throw DimensionError("training data does not match the configured architecture");
  }

  TrainResult result{init_params(arch, derive_seed(config.seed, kInitStream)), {},
                     SampleStatsStore(config.alpha)};
  ModelParams& model = result.model;
  std::vector<double> velocity(model.theta.size(), 0.0);
  const bool plain_sgd = config.momentum == 0.0 && config.weight_decay == 0.0;

  std::vector<int> labels(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) labels[i] = data.label(i);
  const Matrix targets = smooth_label_matrix(labels, data.classes(), config.label_smoothing);

  const RampSchedule schedule = config.schedule();
  const KlBudget kl{config.rho};
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, kShuffleStream));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::int64_t global_step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochDiagnostics diag;
    diag.epoch = epoch + 1;
    double eps_total = 0.0;
    std::size_t eps_count = 0;
    std::size_t hits = 0;
    int batch_index = 0;

    for (std::size_t start = 0; start < order.size();
         start += config.batch_size, ++batch_index, ++global_step) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const Batch batch = gather(data, targets, rows);

      std::vector<double> losses;
      Matrix grads;
      try {
        grads = per_sample_losses_and_gradients(model, batch.inputs, batch.targets, losses);
      } catch (const NonFiniteError& e) {
        throw DivergenceError(epoch, batch_index, e.what());
      }

      const std::vector<double> variances = result.stats.observe_batch(batch.ids, losses);
      const std::int64_t t =
          config.schedule_unit == ScheduleUnit::kEpoch ? epoch : global_step;
      const double cap = schedule.cap_at(t);
      std::vector<double> budgets =
          options.zero_budgets
              ? std::vector<double>(losses.size(), 0.0)
              : assign_budgets(normalize_variances(variances, config.variance_guard),
                               config.eps_min, cap);

      std::vector<double> weights;
      switch (config.method) {
        case Method::kErm:
          weights = uniform_weights(losses.size());
          break;
        case Method::kKlDro:
          weights = kl_dro_weights(losses, kl);
          break;
        case Method::kVarDro:
          weights = water_fill(losses, budgets);
          break;
      }

      const double mean_loss =
          std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
      const double robust = robust_objective(losses, weights);
      const bool upper =
          config.method == Method::kVarDro && hits_upper(weights, budgets);

      for (double e : budgets) {
        eps_total += e;
        diag.max_eps = std::max(diag.max_eps, e);
      }
      eps_count += budgets.size();
      hits += upper ? 1 : 0;
      diag.mean_batch_loss += mean_loss;
      diag.mean_robust_risk += robust;
      diag.cap = std::max(diag.cap, cap);

      if (options.on_batch) {
        options.on_batch(BatchTrace{epoch, batch_index, t, cap, batch.ids, losses, budgets,
                                    weights, mean_loss, robust, upper});
      }

      try {
        if (plain_sgd) {
          model = weighted_step(model, grads, weights, config.learning_rate);
        } else {
          momentum_step(model, grads, weights, config, velocity);
          model.validate();
        }
      } catch (const NonFiniteError& e) {
        throw DivergenceError(epoch, batch_index, e.what());
      }
    }

    const double batches = static_cast<double>(batch_index);
    diag.mean_eps = eps_count > 0 ? eps_total / static_cast<double>(eps_count) : 0.0;
    diag.upper_hit_fraction = static_cast<double>(hits) / batches;
    diag.mean_batch_loss /= batches;
    diag.mean_robust_risk /= batches;
    result.epochs.push_back(diag);
    if (options.on_epoch) options.on_epoch(diag, model);
  }
  return result;
}

}  // namespace vardro
