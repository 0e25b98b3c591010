#pragma once

// Test-only oracles, kept independent of the library implementation paths
// they check.

#include <Eigen/Dense>
#include <cmath>

#include "divmkt/region.hpp"
#include "divmkt/rng.hpp"
#include "divmkt/sde.hpp"
#include "divmkt/time_grid.hpp"

namespace oracles {

/// P(sup_{t<=T} |W_t| <= eps) for standard Brownian motion, by the classical
/// reflection series.
inline double brownian_sup_probability(double eps, double t_horizon) {
  double total = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double m = 2.0 * k + 1.0;
    const double term =
        std::pow(-1.0, k) / m *
        std::exp(-m * m * M_PI * M_PI * t_horizon / (8.0 * eps * eps));
    total += term;
    if (std::abs(term) < 1e-18) break;
  }
  return 4.0 / M_PI * total;
}

/// Distance from x to the boundary of O(delta) by dense search over the
/// boundary rays {max weight = 1-delta} and the coordinate axes (n = 2 only).
inline double boundary_distance_grid_search(const Eigen::Vector2d& x, double delta) {
  const double c = 1.0 - delta;
  double best = std::numeric_limits<double>::infinity();
  // Rays y = r*(c, 1-c) and y = r*(1-c, c), r > 0, plus the axes.
  const Eigen::Vector2d dir1(c, 1.0 - c), dir2(1.0 - c, c);
  for (double r = 1e-4; r < 50.0; r += 1e-4) {
    best = std::min(best, (x - r * dir1).norm());
    best = std::min(best, (x - r * dir2).norm());
  }
  best = std::min(best, std::abs(x[0]));
  best = std::min(best, std::abs(x[1]));
  return best;
}

/// Second, independent implementation of the conditioning filter: simulates
/// the driftless-exponential pre-model with its own stepping loop and keeps
/// paths staying in O(delta) at every grid point.
inline Eigen::MatrixXd filter_sampler_terminal_weights(
    int n_assets, double sigma, double delta, const divmkt::TimeGrid& grid,
    const Eigen::VectorXd& s0, long n_accepted, divmkt::RngStream rng) {
  const double dt = grid.dt();
  const double sdt = std::sqrt(dt);
  const double drift = -0.5 * sigma * sigma * dt;
  const double thresh = 1.0 - delta;
  Eigen::MatrixXd out(n_accepted, n_assets);
  long got = 0;
  std::uint64_t attempt = 0;
  while (got < n_accepted) {
    divmkt::RngStream r = rng.substream(attempt++);
    Eigen::VectorXd logs = s0.array().log();
    bool ok = true;
    for (int k = 0; k < grid.steps() && ok; ++k) {
      for (int i = 0; i < n_assets; ++i)
        logs[i] += drift + sigma * sdt * r.normal();
      // max weight test in log space: mu_max < 1-delta
      Eigen::VectorXd prices = logs.array().exp();
      ok = prices.maxCoeff() / prices.sum() < thresh;
    }
    if (ok) {
      Eigen::VectorXd prices = logs.array().exp();
      out.row(got++) = prices / prices.sum();
    }
  }
  return out;
}

}  // namespace oracles
