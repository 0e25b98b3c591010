#pragma once

#include <Eigen/Dense>

#include "divmkt/time_grid.hpp"

namespace divmkt {

/// A discretized strictly positive n-asset price path on a uniform grid.
/// Row k holds the price vector S(t_k), k = 0..N.
class MarketPath {
 public:
  MarketPath(TimeGrid grid, Eigen::MatrixXd prices);

  static MarketPath from_logs(const TimeGrid& grid, const Eigen::MatrixXd& logs);

  const TimeGrid& grid() const noexcept { return grid_; }
  int assets() const noexcept { return static_cast<int>(values_.cols()); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::MatrixXd::ConstRowXpr row(int k) const { return values_.row(k); }

  Eigen::MatrixXd logs() const { return values_.array().log().matrix(); }

 private:
  TimeGrid grid_;
  Eigen::MatrixXd values_;
};

inline Eigen::MatrixXd log_price(const MarketPath& path) { return path.logs(); }

inline MarketPath price_from_log(const TimeGrid& grid, const Eigen::MatrixXd& logs) {
  return MarketPath::from_logs(grid, logs);
}

}  // namespace divmkt
