#pragma once

#include <Eigen/Dense>

#include "divmkt/market_path.hpp"
#include "divmkt/region.hpp"
#include "divmkt/rng.hpp"
#include "divmkt/sde.hpp"
#include "divmkt/stats.hpp"

namespace divmkt {

/// Rejection sampler for the conditioned diverse market: simulate the
/// driftless-exponential pre-model and keep the first path that stays in
/// O(delta) at every grid point. Accepted paths are exact draws from the
/// discretized conditional law.
struct ConditionedSampler {
  VolatilitySpec vol;
  DiversityRegion region;
  int max_attempts = 100000;
};

struct ConditionedDraw {
  MarketPath path;
  long attempts = 0;  ///< attempts consumed, including the accepted one
};

/// Attempts use index-ordered substreams; racing attempt batches in parallel
/// and keeping the lowest accepted index would produce the identical path.
ConditionedDraw sample_conditioned(const ConditionedSampler& sampler,
                                   const TimeGrid& grid,
                                   const Eigen::VectorXd& s0, RngStream rng);

/// Fraction of unconditioned pre-model paths staying in O at all grid points,
/// with a 95% Wilson interval.
WilsonInterval acceptance_rate(const ConditionedSampler& sampler,
                               const TimeGrid& grid, const Eigen::VectorXd& s0,
                               long n_trials, RngStream rng);

struct BayesRatioReport {
  /// Tube frequency among conditioned-sampler paths matched to the prefix.
  WilsonInterval conditioned_estimate;
  /// {tube and in O} / {in O} among matched pre-model paths.
  double premodel_ratio = 0.0;
  double premodel_ratio_se = 0.0;
  long matched_conditioned = 0;
  long matched_premodel = 0;
  long premodel_in_region = 0;
  double z_score = 0.0;
  bool conclusive = false;
};

/// Checks the conditional identity
///   P{S in G | F_t} = P0{S in G | F_t} / P0{S stays in O | F_t}
/// statistically: both sides are estimated on paths whose prefix up to
/// t_index is nearest-neighbor matched to the reference path, with G the
/// eta-tube around the reference over [t_index, T].
BayesRatioReport bayes_ratio_check(const ConditionedSampler& sampler,
                                   const TimeGrid& grid,
                                   const Eigen::VectorXd& s0, int t_index,
                                   const MarketPath& reference, double tube_radius,
                                   long n_paths, RngStream rng);

}  // namespace divmkt
