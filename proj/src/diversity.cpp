#include "divmkt/diversity.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "divmkt/errors.hpp"

namespace divmkt {

WeightPath::WeightPath(TimeGrid grid, Eigen::MatrixXd weights)
    : grid_(grid), weights_(std::move(weights)) {
  if (weights_.rows() != grid_.points())
    throw std::invalid_argument("WeightPath: row count must equal grid points");
  for (int k = 0; k < weights_.rows(); ++k) {
    if (std::abs(weights_.row(k).sum() - 1.0) > 1e-12)
      throw std::invalid_argument("WeightPath: rows must sum to 1");
  }
  if (!(weights_.minCoeff() > 0.0) || !(weights_.maxCoeff() < 1.0))
    throw std::invalid_argument("WeightPath: entries must lie in (0,1)");
}

WeightPath market_weights(const MarketPath& path) {
  Eigen::MatrixXd w = path.values();
  for (int k = 0; k < w.rows(); ++k) w.row(k) /= w.row(k).sum();
  return WeightPath(path.grid(), std::move(w));
}

DiversityVerdict diversity_verdict(const WeightPath& weights, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("diversity_verdict: delta must be in (0,1)");
  DiversityVerdict v;
  v.delta_tested = delta;
  const double thresh = 1.0 - delta;
  const Eigen::VectorXd m = weights.max_weights();
  v.max_weight_sup = m.maxCoeff();
  v.diverse = v.max_weight_sup < thresh;
  for (int k = 0; k < m.size(); ++k)
    if (m[k] >= thresh) ++v.violation_count;
  // Trapezoid time-average of mu_max over [0, T], divided by T.
  const int n_steps = weights.grid().steps();
  double acc = 0.5 * (m[0] + m[n_steps]);
  for (int k = 1; k < n_steps; ++k) acc += m[k];
  v.weight_avg = acc * weights.grid().dt() / weights.grid().horizon();
  v.weak_diverse = v.weight_avg < thresh;
  return v;
}

PortfolioSpec PortfolioSpec::single_asset(int n, int index) {
  if (index < 0 || index >= n)
    throw std::invalid_argument("PortfolioSpec: index out of range");
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
  pi[index] = 1.0;
  return callback([pi](int, const Eigen::Ref<const Eigen::MatrixXd>&) { return pi; });
}

PortfolioSpec PortfolioSpec::equal_weight(int n) {
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
  return callback([pi](int, const Eigen::Ref<const Eigen::MatrixXd>&) { return pi; });
}

PortfolioSpec PortfolioSpec::market() {
  return callback([](int k, const Eigen::Ref<const Eigen::MatrixXd>& history) {
    Eigen::VectorXd s = history.row(k);
    return Eigen::VectorXd(s / s.sum());
  });
}

PortfolioSpec PortfolioSpec::callback(Evaluator fn) {
  if (!fn) throw std::invalid_argument("PortfolioSpec: null evaluator");
  PortfolioSpec p;
  p.fn_ = std::move(fn);
  return p;
}

Eigen::VectorXd PortfolioSpec::eval(int k, const MarketPath& path) const {
  // The evaluator is handed only rows 0..k; adaptedness holds structurally.
  Eigen::VectorXd pi = fn_(k, path.values().topRows(k + 1));
  if (pi.size() != path.assets())
    throw std::invalid_argument("PortfolioSpec: dimension mismatch");
  if (!(pi.minCoeff() >= -1e-12) || std::abs(pi.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("PortfolioSpec: proportions must be >= 0 and sum to 1");
  return pi;
}

Eigen::VectorXd portfolio_value(const MarketPath& path, const PortfolioSpec& pi,
                                double z0) {
  if (!(z0 > 0.0))
    throw std::invalid_argument("portfolio_value: z0 must be positive");
  const int n_steps = path.grid().steps();
  Eigen::VectorXd v(n_steps + 1);
  v[0] = z0;
  const Eigen::MatrixXd& s = path.values();
  for (int k = 0; k < n_steps; ++k) {
    const Eigen::VectorXd w = pi.eval(k, path);
    double rel = 0.0;
    for (int i = 0; i < s.cols(); ++i)
      rel += w[i] * (s(k + 1, i) - s(k, i)) / s(k, i);
    const double factor = 1.0 + rel;
    if (!(factor > 0.0))
      throw StepSizeError(
          "portfolio_value: nonpositive value factor at step " +
          std::to_string(k + 1) + "; refine the time grid");
    v[k + 1] = v[k] * factor;
  }
  return v;
}

RelativePerformanceReport relative_performance(const std::vector<MarketPath>& paths,
                                               const PortfolioSpec& pi,
                                               const PortfolioSpec& rho, double z0) {
  if (paths.empty())
    throw std::invalid_argument("relative_performance: need at least one path");
  long geq = 0, gt = 0;
  std::vector<double> log_ratios;
  log_ratios.reserve(paths.size());
  for (const MarketPath& p : paths) {
    const double v_pi = portfolio_value(p, pi, z0)[p.grid().steps()];
    const double v_rho = portfolio_value(p, rho, z0)[p.grid().steps()];
    if (v_pi >= v_rho) ++geq;
    if (v_pi > v_rho) ++gt;
    log_ratios.push_back(std::log(v_pi / v_rho));
  }
  RelativePerformanceReport r;
  r.n_paths = static_cast<long>(paths.size());
  r.prob_geq = wilson_interval(geq, r.n_paths);
  r.prob_gt = wilson_interval(gt, r.n_paths);
  r.log_ratio = mean_with_se(log_ratios);
  return r;
}

}  // namespace divmkt
