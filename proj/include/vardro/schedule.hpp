#pragma once

#include <cstdint>

namespace vardro {

// Global cap on per-sample radii: held at eps_start for t < warmup, then
// linear up to eps_end at t = total_steps.
struct RampSchedule {
  double eps_start = 0.05;
  double eps_end = 0.25;
  std::int64_t warmup = 0;
  std::int64_t total_steps = 1;

  void validate() const;
  double cap_at(std::int64_t t) const;
};

}  // namespace vardro
