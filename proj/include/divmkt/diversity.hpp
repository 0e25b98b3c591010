#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "divmkt/market_path.hpp"
#include "divmkt/stats.hpp"

namespace divmkt {

/// Market weights mu_i(t_k) = S_i(t_k) / sum_j S_j(t_k); rows live on the
/// open simplex.
class WeightPath {
 public:
  WeightPath(TimeGrid grid, Eigen::MatrixXd weights);
  const TimeGrid& grid() const noexcept { return grid_; }
  int assets() const noexcept { return static_cast<int>(weights_.cols()); }
  const Eigen::MatrixXd& values() const noexcept { return weights_; }
  /// Largest weight at each grid point.
  Eigen::VectorXd max_weights() const { return weights_.rowwise().maxCoeff(); }

 private:
  TimeGrid grid_;
  Eigen::MatrixXd weights_;
};

WeightPath market_weights(const MarketPath& path);

struct DiversityVerdict {
  bool diverse = false;       ///< sup_k mu_max(t_k) < 1-delta, strictly
  bool weak_diverse = false;  ///< trapezoid time-average of mu_max < 1-delta
  double max_weight_sup = 0.0;
  double weight_avg = 0.0;
  double delta_tested = 0.0;
  long violation_count = 0;  ///< grid points with mu_max >= 1-delta
};

DiversityVerdict diversity_verdict(const WeightPath& weights, double delta);

/// Long-only, fully invested proportions pi(t_k); evaluators see only the
/// price history up to and including t_k.
class PortfolioSpec {
 public:
  using Evaluator = std::function<Eigen::VectorXd(
      int k, const Eigen::Ref<const Eigen::MatrixXd>& history)>;

  static PortfolioSpec single_asset(int n, int index);
  static PortfolioSpec equal_weight(int n);
  /// The market portfolio pi = mu.
  static PortfolioSpec market();
  static PortfolioSpec callback(Evaluator fn);

  /// Evaluates at t_k; validates pi >= 0 and sum pi = 1.
  Eigen::VectorXd eval(int k, const MarketPath& path) const;

 private:
  PortfolioSpec() = default;
  Evaluator fn_;
};

/// Per-step multiplicative compounding of the value SDE:
///   V(t_{k+1}) = V(t_k) * (1 + sum_i pi_i(t_k) * (S_i(t_{k+1})-S_i(t_k))/S_i(t_k)).
/// Throws StepSizeError when a value factor is nonpositive.
Eigen::VectorXd portfolio_value(const MarketPath& path, const PortfolioSpec& pi,
                                double z0);

struct RelativePerformanceReport {
  WilsonInterval prob_geq;  ///< P(V_pi(T) >= V_rho(T))
  WilsonInterval prob_gt;   ///< P(V_pi(T) >  V_rho(T))
  MeanEstimate log_ratio;   ///< mean of log(V_pi(T)/V_rho(T))
  long n_paths = 0;
  /// Frequencies over a finite ensemble cannot certify an almost-sure
  /// statement; this stays attached to every report.
  std::string note =
      "empirical comparison only: evidence, never proof, of relative arbitrage";
};

RelativePerformanceReport relative_performance(const std::vector<MarketPath>& paths,
                                               const PortfolioSpec& pi,
                                               const PortfolioSpec& rho, double z0);

}  // namespace divmkt
