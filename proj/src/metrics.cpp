#include "vardro/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "vardro/errors.hpp"

namespace vardro {

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

MetricsRecord summarize_predictions(const Dataset& data, const std::vector<int>& predicted,
                                    const std::vector<double>& losses,
                                    const std::string& split, int epoch) {
  const std::size_t n = data.size();
  if (n == 0) throw InvalidArgumentError("cannot evaluate an empty dataset");
  if (predicted.size() != n || losses.size() != n) {
    throw DimensionError("predictions do not match the dataset");
  }
  MetricsRecord r;
  r.epoch = epoch;
  r.split = split;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    correct += predicted[i] == data.labels[i] ? 1 : 0;
    loss_sum += losses[i];
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  r.mean_loss = loss_sum / static_cast<double>(n);

  if (data.has_groups()) {
    const std::size_t g = data.group_names.size();
    std::vector<std::size_t> total(g, 0), hit(g, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(data.groups[i]);
      ++total[k];
      hit[k] += predicted[i] == data.labels[i] ? 1 : 0;
    }
    for (std::size_t k = 0; k < g; ++k) {
      if (total[k] == 0) continue;
      const double acc = static_cast<double>(hit[k]) / static_cast<double>(total[k]);
      r.group_accuracy.emplace_back(data.group_names[k], acc);
      r.worst_group_accuracy = std::min(r.worst_group_accuracy.value_or(1.0), acc);
    }
  }
  return r;
}

MetricsRecord evaluate(const ModelParams& model, const Dataset& data, const std::string& split,
                       int epoch) {
  if (data.size() == 0) throw InvalidArgumentError("cannot evaluate an empty dataset");
  data.validate();
  const Matrix targets = smooth_label_matrix(data.labels, model.arch.classes, 0.0);
  const std::vector<double> losses = per_sample_losses(model, data.features, targets);
  return summarize_predictions(data, predict(model, data.features), losses, split, epoch);
}

std::string metrics_csv_header() {
  return "epoch,split,accuracy,worst_group_accuracy,mean_loss,mean_eps,max_eps,"
         "upper_hit_fraction,group_accuracies";
}

std::string to_csv_row(const MetricsRecord& r) {
  std::string groups;
  for (const auto& [name, acc] : r.group_accuracy) {
    if (!groups.empty()) groups += ';';
    groups += name + "=" + format_number(acc);
  }
  return std::to_string(r.epoch) + "," + r.split + "," + format_number(r.accuracy) + "," +
         (r.worst_group_accuracy ? format_number(*r.worst_group_accuracy) : "") + "," +
         format_number(r.mean_loss) + "," + format_number(r.mean_eps) + "," +
         format_number(r.max_eps) + "," + format_number(r.upper_hit_fraction) + "," + groups;
}

}  // namespace vardro
