#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vardro/dataset.hpp"
#include "vardro/model_kit.hpp"

namespace vardro {

struct MetricsRecord {
  int epoch = 0;
  std::string split;
  double accuracy = 0.0;
  std::vector<std::pair<std::string, double>> group_accuracy;  // non-empty groups
  std::optional<double> worst_group_accuracy;
  double mean_loss = 0.0;  // unsmoothed cross-entropy
  double mean_eps = 0.0;
  double max_eps = 0.0;
  double upper_hit_fraction = 0.0;
};

// Accuracy, per-group accuracy and mean cross-entropy of a model on a
// labeled dataset.
MetricsRecord evaluate(const ModelParams& model, const Dataset& data,
                       const std::string& split = "test", int epoch = 0);

// Same, from precomputed predictions and losses.
MetricsRecord summarize_predictions(const Dataset& data, const std::vector<int>& predicted,
                                    const std::vector<double>& losses,
                                    const std::string& split, int epoch);

std::string metrics_csv_header();
std::string to_csv_row(const MetricsRecord& record);

}  // namespace vardro
