#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "vardro/config.hpp"
#include "vardro/dataset.hpp"
#include "vardro/inner_solver.hpp"
#include "vardro/model_kit.hpp"
#include "vardro/variance_tracker.hpp"

namespace vardro {

// Everything the weighting path saw for one mini-batch.
struct BatchTrace {
  int epoch = 0;
  int batch = 0;
  std::int64_t step = 0;  // schedule step used for the cap
  double cap = 0.0;
  std::span<const SampleId> ids;
  std::span<const double> losses;
  std::span<const double> budgets;
  std::span<const double> weights;
  double mean_loss = 0.0;
  double robust_risk = 0.0;
  bool upper_hit = false;
};

struct EpochDiagnostics {
  int epoch = 0;  // 1-based
  double cap = 0.0;
  double mean_eps = 0.0;
  double max_eps = 0.0;
  double upper_hit_fraction = 0.0;
  double mean_batch_loss = 0.0;
  double mean_robust_risk = 0.0;
};

struct TrainOptions {
  // Test hook: force every per-sample radius to exactly zero.
  bool zero_budgets = false;
  std::function<void(const BatchTrace&)> on_batch;
  // Called after each epoch with the 1-based epoch and current parameters.
  std::function<void(const EpochDiagnostics&, const ModelParams&)> on_epoch;
};

struct TrainResult {
  ModelParams model;
  std::vector<EpochDiagnostics> epochs;
  SampleStatsStore stats;
};

// Mini-batch min-max training. Per batch: losses -> EMA variances ->
// normalized variances -> budgets under the scheduled cap -> method
// weights -> weighted gradient step. Throws DivergenceError on a
// non-finite loss.
TrainResult train(const ExperimentConfig& config, const TrainingView& data,
                  const TrainOptions& options = {});

}  // namespace vardro
