#include "vardro/schedule.hpp"

#include <algorithm>
#include <string>

#include "vardro/errors.hpp"

namespace vardro {

void RampSchedule::validate() const {
  if (!(eps_start > 0.0)) throw InvalidArgumentError("eps_start must be positive");
  if (!(eps_end >= eps_start)) {
    throw InvalidArgumentError("eps_end must be at least eps_start");
  }
  if (total_steps <= 0) throw InvalidArgumentError("total_steps must be positive");
  if (warmup < 0 || warmup >= total_steps) {
    throw InvalidArgumentError("warmup must lie in [0, total_steps)");
  }
}

double RampSchedule::cap_at(std::int64_t t) const {
  validate();
  if (t < 0 || t > total_steps) {
    throw InvalidArgumentError("step " + std::to_string(t) + " outside [0, " +
                               std::to_string(total_steps) + "]");
  }
  if (t < warmup) return eps_start;
  if (t == total_steps) return eps_end;
  const double frac =
      static_cast<double>(t - warmup) / static_cast<double>(total_steps - warmup);
  return std::min(eps_end, eps_start + frac * (eps_end - eps_start));
}

}  // namespace vardro
