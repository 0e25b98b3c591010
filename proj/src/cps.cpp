#include "divmkt/cps.hpp"

#include <cmath>
#include <stdexcept>

namespace divmkt {

EpsilonProcess build_epsilon(const MarketPath& path, double eta,
                             const DiversityRegion& region) {
  if (!(eta > 0.0)) throw std::invalid_argument("build_epsilon: eta must be positive");
  if (path.assets() != region.assets())
    throw std::invalid_argument("build_epsilon: dimension mismatch");

  const int points = path.grid().points();
  EpsilonProcess eps;
  eps.grid = path.grid();
  eps.eta = eta;
  eps.base.resize(points);
  eps.clamped.resize(points);
  eps.values.resize(points);

  const double ratio = eta / (1.0 + eta);
  double running = std::numeric_limits<double>::infinity();
  for (int k = 0; k < points; ++k) {
    const Eigen::VectorXd s = path.row(k);
    if (!region.contains(s))
      throw std::domain_error("build_epsilon: path leaves O(delta) at index " +
                              std::to_string(k));
    eps.base[k] = ratio * s.minCoeff();
    eps.clamped[k] = epsilon_pointwise(eps.base[k], dist_to_complement(s, region));
    running = std::min(running, eps.clamped[k]);
    eps.values[k] = running;
  }
  return eps;
}

RetirementWalk retirement_walk(const MarketPath& path, const EpsilonProcess& eps) {
  if (!(path.grid() == eps.grid))
    throw std::invalid_argument("retirement_walk: grid mismatch");
  const int n_steps = path.grid().steps();
  const Eigen::MatrixXd& s = path.values();

  RetirementWalk walk;
  walk.pivot_times.push_back(0);
  walk.pivots.push_back(s.row(0));

  int tau = 0;
  while (tau < n_steps) {
    const Eigen::VectorXd center = s.row(tau);
    int next = -1;
    for (int k = tau + 1; k <= n_steps; ++k) {
      if ((s.row(k).transpose() - center).norm() > eps.values[k] / 2.0) {
        next = k;
        break;
      }
    }
    if (next < 0 || next == n_steps) {
      // No exit before the horizon (or the exit falls exactly on it):
      // tau_{n+1} = T and the pivot freezes.
      walk.pivot_times.push_back(n_steps);
      walk.pivots.push_back(walk.pivots.back());
      walk.overshoots.push_back(0.0);
      break;
    }
    const Eigen::VectorXd hit = s.row(next);
    const double r = (hit - center).norm();
    const double radius = eps.values[next] / 2.0;
    walk.pivot_times.push_back(next);
    walk.pivots.push_back(center + (radius / r) * (hit - center));
    walk.overshoots.push_back(r - radius);
    tau = next;
  }
  walk.retired = true;
  walk.retirement_step = static_cast<int>(walk.pivot_times.size()) - 1;
  return walk;
}

TubeReport tube_check(const MarketPath& path, const EpsilonProcess& eps,
                      const RetirementWalk& walk) {
  if (walk.pivot_times.size() < 2 || !walk.retired ||
      walk.pivot_times.front() != 0 ||
      walk.pivot_times.back() != path.grid().steps())
    throw std::invalid_argument("tube_check: walk does not cover the grid");

  const Eigen::MatrixXd& s = path.values();
  TubeReport report;
  report.max_slack = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n + 1 < walk.pivot_times.size(); ++n) {
    const Eigen::VectorXd& x_next = walk.pivots[n + 1];
    for (int k = walk.pivot_times[n]; k <= walk.pivot_times[n + 1]; ++k) {
      const double slack = (s.row(k).transpose() - x_next).norm() - eps.values[k];
      if (slack > report.max_slack) {
        report.max_slack = slack;
        report.worst_index = k;
      }
    }
  }
  report.ok = report.max_slack <= 0.0;
  return report;
}

}  // namespace divmkt
