#include "vardro/variance_tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "vardro/errors.hpp"

namespace vardro {

namespace {

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgumentError("smoothing rate must lie in (0, 1)");
  }
}

}  // namespace

SampleStats ema_update(const SampleStats& stats, double loss, double alpha) {
  require_alpha(alpha);
  if (!std::isfinite(loss)) {
    throw NonFiniteError("cannot track a non-finite loss");
  }
  if (!stats.observed) {
    return SampleStats{loss, 0.0, true};
  }
  const double deviation = loss - stats.mean;
  SampleStats next;
  next.mean = (1.0 - alpha) * stats.mean + alpha * loss;
  next.variance = (1.0 - alpha) * stats.variance + alpha * deviation * deviation;
  next.observed = true;
  return next;
}

SampleStatsStore::SampleStatsStore(double alpha) : alpha_(alpha) {
  require_alpha(alpha);
}

std::vector<double> SampleStatsStore::observe_batch(std::span<const SampleId> ids,
                                                    std::span<const double> losses) {
  if (ids.size() != losses.size()) {
    throw DimensionError("ids and losses differ in length");
  }
  std::unordered_set<SampleId> seen;
  seen.reserve(ids.size());
  for (SampleId id : ids) {
    if (!seen.insert(id).second) {
      throw InvalidArgumentError("duplicate sample id " + std::to_string(id) +
                                 " in one batch");
    }
  }
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!std::isfinite(losses[i])) {
      throw NonFiniteError("loss for sample id " + std::to_string(ids[i]) +
                           " is not finite");
    }
  }

  std::vector<double> snapshot(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    SampleStats& entry = stats_[ids[i]];
    entry = ema_update(entry, losses[i], alpha_);
    snapshot[i] = entry.variance;
  }
  return snapshot;
}

SampleStats SampleStatsStore::get(SampleId id) const {
  const auto it = stats_.find(id);
  return it == stats_.end() ? SampleStats{} : it->second;
}

nlohmann::json SampleStatsStore::to_json() const {
  std::vector<SampleId> ids;
  ids.reserve(stats_.size());
  for (const auto& [id, _] : stats_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());

  nlohmann::json entries = nlohmann::json::array();
  for (SampleId id : ids) {
    const SampleStats& s = stats_.at(id);
    entries.push_back({{"id", id}, {"mu", s.mean}, {"v", s.variance}});
  }
  return {{"alpha", alpha_}, {"stats", std::move(entries)}};
}

SampleStatsStore SampleStatsStore::from_json(const nlohmann::json& doc) {
  SampleStatsStore store(doc.at("alpha").get<double>());
  for (const auto& entry : doc.at("stats")) {
    const auto id = entry.at("id").get<SampleId>();
    SampleStats s{entry.at("mu").get<double>(), entry.at("v").get<double>(), true};
    if (s.variance < 0.0 || !std::isfinite(s.mean)) {
      throw InvalidArgumentError("corrupt stats entry for id " + std::to_string(id));
    }
    if (!store.stats_.emplace(id, s).second) {
      throw InvalidArgumentError("duplicate id " + std::to_string(id) + " in stats");
    }
  }
  return store;
}

bool SampleStatsStore::operator==(const SampleStatsStore& other) const {
  if (alpha_ != other.alpha_ || stats_.size() != other.stats_.size()) return false;
  for (const auto& [id, s] : stats_) {
    const auto it = other.stats_.find(id);
    if (it == other.stats_.end()) return false;
    const SampleStats& o = it->second;
    if (s.mean != o.mean || s.variance != o.variance || s.observed != o.observed) {
      return false;
    }
  }
  return true;
}

std::vector<double> normalize_variances(std::span<const double> variances,
                                        double guard) {
  if (variances.empty()) {
    throw InvalidArgumentError("cannot normalize an empty batch");
  }
  if (!(guard > 0.0)) {
    throw InvalidArgumentError("normalization guard must be positive");
  }
  for (double v : variances) {
    if (!(v >= 0.0)) throw InvalidArgumentError("variance must be nonnegative");
  }
  const auto [lo, hi] = std::minmax_element(variances.begin(), variances.end());
  const double low = *lo;
  const double denom = *hi - low + guard;
  std::vector<double> out(variances.size());
  for (std::size_t i = 0; i < variances.size(); ++i) {
    out[i] = (variances[i] - low) / denom;
  }
  return out;
}

std::vector<double> assign_budgets(std::span<const double> normalized,
                                   double eps_min, double eps_cap) {
  if (!(eps_min > 0.0)) {
    throw InvalidArgumentError("eps_min must be positive");
  }
  if (!(eps_cap >= eps_min)) {
    throw InvalidArgumentError("eps_cap must be at least eps_min");
  }
  std::vector<double> out(normalized.size());
  const double span = eps_cap - eps_min;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    // Clamp guards the affine map against rounding past the cap.
    out[i] = std::clamp(eps_min + span * normalized[i], eps_min, eps_cap);
  }
  return out;
}

}  // namespace vardro
