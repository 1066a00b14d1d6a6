#pragma once

#include <cstddef>

#include "nlwm/radial_grid.hpp"

namespace nlwm {

/// Per-step context handed to observers. `direction` is +1 for the forward run of
/// (f, g) and -1 for the run of (f, -g) that realizes u(-t); `time_weight` is the
/// trapezoid weight of this step (dt/2 at both ends of the run, dt inside).
struct StepInfo {
  int direction = 1;
  std::size_t step = 0;
  std::size_t total_steps = 0;
  double time_weight = 0.0;
};

class Observer {
 public:
  virtual ~Observer() = default;
  virtual void observe(const FieldState& state, const StepInfo& info) = 0;
};

}  // namespace nlwm
