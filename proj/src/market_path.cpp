#include "divmkt/market_path.hpp"

#include <stdexcept>
#include <utility>

namespace divmkt {

MarketPath::MarketPath(TimeGrid grid, Eigen::MatrixXd prices)
    : grid_(grid), values_(std::move(prices)) {
  if (values_.rows() != grid_.points())
    throw std::invalid_argument("MarketPath: row count must equal grid points");
  if (values_.cols() < 1)
    throw std::invalid_argument("MarketPath: need at least one asset");
  if (!(values_.minCoeff() > 0.0) || !values_.allFinite())
    throw std::invalid_argument("MarketPath: prices must be strictly positive");
}

MarketPath MarketPath::from_logs(const TimeGrid& grid, const Eigen::MatrixXd& logs) {
  return MarketPath(grid, logs.array().exp().matrix());
}

}  // namespace divmkt
