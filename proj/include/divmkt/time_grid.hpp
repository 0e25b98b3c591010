#pragma once

#include <stdexcept>

namespace divmkt {

/// Uniform time grid t_k = k*T/N on [0, T].
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0))
      throw std::invalid_argument("TimeGrid: horizon must be positive");
    if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
  }

  double horizon() const noexcept { return horizon_; }
  int steps() const noexcept { return steps_; }
  int points() const noexcept { return steps_ + 1; }
  double dt() const noexcept { return horizon_ / steps_; }

  /// t_k = k*T/N; the final point is pinned to T so no rounding drift
  /// survives in the horizon.
  double time(int k) const noexcept {
    return k == steps_ ? horizon_ : k * horizon_ / steps_;
  }

  bool operator==(const TimeGrid& o) const noexcept {
    return horizon_ == o.horizon_ && steps_ == o.steps_;
  }

 private:
  double horizon_;
  int steps_;
};

}  // namespace divmkt
