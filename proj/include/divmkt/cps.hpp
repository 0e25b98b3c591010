#pragma once

#include <Eigen/Dense>
#include <vector>

#include "divmkt/market_path.hpp"
#include "divmkt/region.hpp"
#include "divmkt/time_grid.hpp"

namespace divmkt {

/// The per-time tube radius, recorded through its three transforms:
///   base     eta/(1+eta) * min_i S_i(t)
///   clamped  min(base, dist(S(t), O^c)/2)   keeps the shadow price inside O
///   values   running minimum of clamped      the nonincreasing envelope
struct EpsilonProcess {
  TimeGrid grid{1.0, 1};
  double eta = 0.0;
  Eigen::VectorXd base;
  Eigen::VectorXd clamped;
  Eigen::VectorXd values;
};

/// Pointwise combinator applied before the running-minimum envelope.
inline double epsilon_pointwise(double base, double dist_to_boundary) {
  return std::min(base, 0.5 * dist_to_boundary);
}

/// Builds the epsilon process for a path evolving in O(delta).
/// Throws std::domain_error if any grid point leaves the region.
EpsilonProcess build_epsilon(const MarketPath& path, double eta,
                             const DiversityRegion& region);

/// The random walk with retirement. Pivot times are strictly increasing grid
/// indices with tau_0 = 0 and the final index always N; the pivot freezes
/// ("retires") once the horizon is reached.
///
/// Grid rendering: tau_{n+1} is the first index k > tau_n with
/// |S(t_k) - S(t_{tau_n})| > eps(t_k)/2; the new pivot is the crossing value
/// pulled back onto the sphere of radius eps(t_{tau_{n+1}})/2 around
/// S(t_{tau_n}), the discrete stand-in for the continuous crossing location.
/// The per-trigger overshoot that the pull-back removes is recorded.
struct RetirementWalk {
  std::vector<int> pivot_times;          ///< tau_0 = 0 < tau_1 < ... <= N
  std::vector<Eigen::VectorXd> pivots;   ///< X_0 = S(0), then per the rule
  std::vector<double> overshoots;        ///< |S(tau) - S(tau_prev)| - eps/2 at triggers
  bool retired = false;
  int retirement_step = -1;              ///< n with tau_n = N
};

RetirementWalk retirement_walk(const MarketPath& path, const EpsilonProcess& eps);

/// Verifies |S(t_k) - X_{n+1}| <= eps(t_k) on every bracket
/// tau_n <= k <= tau_{n+1}. A positive slack means the construction is
/// broken (or a single Euler step jumped by more than the tube radius).
struct TubeReport {
  bool ok = false;
  double max_slack = 0.0;  ///< max of |S - X| - eps; must be <= 0
  int worst_index = -1;    ///< grid index attaining the max
};

TubeReport tube_check(const MarketPath& path, const EpsilonProcess& eps,
                      const RetirementWalk& walk);

}  // namespace divmkt
