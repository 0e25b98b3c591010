#include "divmkt/conditioned.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "divmkt/errors.hpp"
#include "divmkt/parallel.hpp"
#include "divmkt/path_model.hpp"

namespace divmkt {

namespace {

bool stays_in_region(const Eigen::MatrixXd& prices, const DiversityRegion& region) {
  for (int k = 0; k < prices.rows(); ++k) {
    if (!region.contains(Eigen::VectorXd(prices.row(k)))) return false;
  }
  return true;
}

}  // namespace

ConditionedDraw sample_conditioned(const ConditionedSampler& sampler,
                                   const TimeGrid& grid,
                                   const Eigen::VectorXd& s0, RngStream rng) {
  if (!sampler.region.contains(s0))
    throw std::invalid_argument("sample_conditioned: s0 outside O(delta)");
  const DriftSpec drift = premodel_drift(sampler.vol);
  for (int attempt = 0; attempt < sampler.max_attempts; ++attempt) {
    MarketPath path =
        simulate(grid, s0, drift, sampler.vol, rng.substream(attempt));
    if (stays_in_region(path.values(), sampler.region))
      return ConditionedDraw{std::move(path), attempt + 1};
  }
  throw AcceptanceTooRare("sample_conditioned: attempt budget exhausted",
                          1.0 / sampler.max_attempts, sampler.max_attempts);
}

WilsonInterval acceptance_rate(const ConditionedSampler& sampler,
                               const TimeGrid& grid, const Eigen::VectorXd& s0,
                               long n_trials, RngStream rng) {
  if (n_trials < 1)
    throw std::invalid_argument("acceptance_rate: n_trials >= 1");
  // An empty region accepts nothing, whatever the start point.
  if (sampler.region.empty()) return wilson_interval(0, n_trials);
  if (!sampler.region.contains(s0))
    throw std::invalid_argument("acceptance_rate: s0 outside O(delta)");

  const DriftSpec drift = premodel_drift(sampler.vol);
  std::vector<unsigned char> inside(n_trials, 0);
  parallel_for(n_trials, [&](long i) {
    MarketPath path = simulate(grid, s0, drift, sampler.vol, rng.substream(i));
    inside[i] = stays_in_region(path.values(), sampler.region) ? 1 : 0;
  });
  long hits = 0;
  for (unsigned char b : inside) hits += b;
  return wilson_interval(hits, n_trials);
}

BayesRatioReport bayes_ratio_check(const ConditionedSampler& sampler,
                                   const TimeGrid& grid,
                                   const Eigen::VectorXd& s0, int t_index,
                                   const MarketPath& reference, double tube_radius,
                                   long n_paths, RngStream rng) {
  if (t_index < 0 || t_index > grid.steps())
    throw std::invalid_argument("bayes_ratio_check: t_index out of range");
  if (!(tube_radius > 0.0))
    throw std::invalid_argument("bayes_ratio_check: tube radius must be positive");
  if (n_paths < 2)
    throw std::invalid_argument("bayes_ratio_check: need at least two paths");

  const Eigen::MatrixXd& ref = reference.values();
  const auto prefix_dist = [&](const Eigen::MatrixXd& prices) {
    double d = 0.0;
    for (int k = 0; k <= t_index; ++k)
      d = std::max(d, (prices.row(k) - ref.row(k)).norm());
    return d;
  };
  const auto tube_hit = [&](const Eigen::MatrixXd& prices) {
    for (int k = t_index; k < prices.rows(); ++k) {
      if ((prices.row(k) - ref.row(k)).norm() >= tube_radius) return false;
    }
    return true;
  };

  // Ensemble A: conditioned-sampler paths.
  struct Obs {
    double dist;
    unsigned char tube;
    unsigned char in_region;
  };
  std::vector<Obs> cond(n_paths), pre(n_paths);
  RngStream rng_cond = rng.substream(1);
  RngStream rng_pre = rng.substream(2);
  parallel_for(n_paths, [&](long i) {
    ConditionedDraw draw =
        sample_conditioned(sampler, grid, s0, rng_cond.substream(i));
    const Eigen::MatrixXd& prices = draw.path.values();
    cond[i].dist = prefix_dist(prices);
    cond[i].tube = tube_hit(prices) ? 1 : 0;
    cond[i].in_region = 1;
  });
  const DriftSpec drift = premodel_drift(sampler.vol);
  parallel_for(n_paths, [&](long i) {
    MarketPath path = simulate(grid, s0, drift, sampler.vol, rng_pre.substream(i));
    const Eigen::MatrixXd& prices = path.values();
    pre[i].dist = prefix_dist(prices);
    pre[i].tube = tube_hit(prices) ? 1 : 0;
    pre[i].in_region = stays_in_region(prices, sampler.region) ? 1 : 0;
  });

  // Nearest-neighbor bundle: everything within the k-th smallest prefix
  // distance (ties included, so t_index = 0 matches every path).
  const long k_match = std::max<long>(50, n_paths / 20);
  const auto match_threshold = [&](const std::vector<Obs>& obs) {
    std::vector<double> d(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) d[i] = obs[i].dist;
    const long k = std::min<long>(k_match, static_cast<long>(d.size())) - 1;
    std::nth_element(d.begin(), d.begin() + k, d.end());
    return d[k];
  };

  BayesRatioReport r;
  const double thr_cond = match_threshold(cond);
  long cond_n = 0, cond_hits = 0;
  for (const Obs& o : cond) {
    if (o.dist <= thr_cond) {
      ++cond_n;
      cond_hits += o.tube;
    }
  }
  r.matched_conditioned = cond_n;
  r.conditioned_estimate = wilson_interval(cond_hits, std::max<long>(cond_n, 1));

  const double thr_pre = match_threshold(pre);
  long pre_n = 0, pre_in = 0, pre_both = 0;
  for (const Obs& o : pre) {
    if (o.dist <= thr_pre) {
      ++pre_n;
      if (o.in_region) {
        ++pre_in;
        if (o.tube) ++pre_both;
      }
    }
  }
  r.matched_premodel = pre_n;
  r.premodel_in_region = pre_in;

  if (cond_n < 20 || pre_in < 20) {
    r.conclusive = false;
    return r;
  }
  r.premodel_ratio = static_cast<double>(pre_both) / pre_in;
  r.premodel_ratio_se =
      std::sqrt(std::max(r.premodel_ratio * (1.0 - r.premodel_ratio), 1e-12) / pre_in);
  const double p_a = r.conditioned_estimate.p_hat;
  const double se_a =
      std::sqrt(std::max(p_a * (1.0 - p_a), 1e-12) / cond_n);
  r.z_score = (p_a - r.premodel_ratio) /
              std::sqrt(se_a * se_a + r.premodel_ratio_se * r.premodel_ratio_se);
  r.conclusive = true;
  return r;
}

}  // namespace divmkt
