#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace vardro {

using SampleId = std::uint64_t;

struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;
  bool observed = false;
};

inline constexpr double kDefaultSmoothing = 0.05;
inline constexpr double kDefaultNormalizeGuard = 1e-8;

// One step of the exponential moving average of loss mean and variance.
// The variance term uses the mean from before this update. The first
// observation seeds mean = loss, variance = 0.
SampleStats ema_update(const SampleStats& stats, double loss, double alpha);

// Per-sample EMA statistics keyed by stable sample id.
class SampleStatsStore {
 public:
  explicit SampleStatsStore(double alpha = kDefaultSmoothing);

  double alpha() const { return alpha_; }
  std::size_t size() const { return stats_.size(); }

  // Updates every id in the batch and returns post-update variances in
  // batch order. Rejects duplicate ids within one batch.
  std::vector<double> observe_batch(std::span<const SampleId> ids,
                                    std::span<const double> losses);

  // Unobserved ids yield a default (unobserved) record.
  SampleStats get(SampleId id) const;

  nlohmann::json to_json() const;
  static SampleStatsStore from_json(const nlohmann::json& doc);

  bool operator==(const SampleStatsStore& other) const;

 private:
  double alpha_;
  std::unordered_map<SampleId, SampleStats> stats_;
};

// Min-max normalization within the batch: (v - min) / (max - min + guard).
std::vector<double> normalize_variances(std::span<const double> variances,
                                        double guard = kDefaultNormalizeGuard);

// eps_i = eps_min + (eps_cap - eps_min) * vbar_i.
std::vector<double> assign_budgets(std::span<const double> normalized,
                                   double eps_min, double eps_cap);

}  // namespace vardro
