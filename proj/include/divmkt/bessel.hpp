#pragma once

#include <Eigen/Dense>

#include "divmkt/path_model.hpp"
#include "divmkt/rng.hpp"
#include "divmkt/sde.hpp"
#include "divmkt/stats.hpp"
#include "divmkt/time_grid.hpp"

namespace divmkt {

/// Radial view of a driftless bounded-volatility martingale path X:
/// R = |X|^2, the projected one-dimensional martingale
/// N_t = int X' dX / |X|, its model quadratic variation (the clock), and the
/// effective time-changed drift b(s) = Tr(a) / (X'aX/|X|^2), all on the grid.
struct RadialDecomposition {
  Eigen::VectorXd r;                ///< R at each grid point
  Eigen::VectorXd qvar_n;           ///< cumulative <N>, qvar_n[0] = 0
  Eigen::VectorXd beta_increments;  ///< dN per step: Brownian increments on the clock
  Eigen::VectorXd b;                ///< per-step effective drift, in [0, C d / c]
};

/// Throws ModelContractViolation if a step's clock increment leaves
/// [c dt, C dt]. At X = 0 the radial direction is taken as the first
/// coordinate axis; the set {X = 0} carries no quadratic variation in the
/// limit, so the choice only moves O(dt) terms.
RadialDecomposition radial_decompose(const Eigen::MatrixXd& x_path,
                                     const TimeGrid& grid,
                                     const VolatilitySpec& vol, double c,
                                     double big_c);

/// Squared Bessel parameters; the comparison needs dimension >= d C / c.
struct BesqParams {
  double dimension = 0.0;
  double c = 1.0;
  double big_c = 1.0;
  int drivers = 1;

  void validate() const;
};

/// Full-truncation Euler for dZ = 2 sqrt(Z) dbeta + dimension dt from Z0 = 0:
/// Z+ goes under the square root and the state is clamped at 0.
Eigen::VectorXd besq_simulate(double dimension, const TimeGrid& grid, RngStream rng);

/// Increment-driven scheme on a nonuniform clock, used for the coupled
/// comparison. For dimension >= 1 the positivity-preserving Milstein form
/// (sqrt(Z) + dbeta)^2 + (dim-1) ds is used: it needs no clamp and couples
/// sharply to the squared radius (identically so when dim = 1); smaller
/// dimensions fall back to full-truncation Euler.
Eigen::VectorXd besq_on_clock(double dimension,
                              const Eigen::VectorXd& beta_increments,
                              const Eigen::VectorXd& clock_increments);

struct DominationReport {
  double max_diff = 0.0;       ///< max over the grid of R~ - Z
  double max_abs_diff = 0.0;   ///< max over the grid of |R~ - Z|
  double frac_dominated = 0.0; ///< fraction of grid points with R~ <= Z + tol
  long points = 0;
  double tol = 0.0;
};

/// Time-changes R into R~ and simulates Z on the very beta extracted from the
/// radial decomposition, then reports how far the pathwise domination
/// R~ <= Z survives discretization.
DominationReport coupled_comparison(const Eigen::MatrixXd& x_path,
                                    const TimeGrid& grid,
                                    const VolatilitySpec& vol,
                                    const BesqParams& params, double tol_cmp);

/// Simulates the driftless martingale dX = sigma dW from X0 = 0.
Eigen::MatrixXd simulate_martingale(const TimeGrid& grid, const VolatilitySpec& vol,
                                    RngStream rng);

struct SupportProbabilityReport {
  WilsonInterval direct;      ///< P(sup_k |X(t_k)| <= eps)
  WilsonInterval besq_bound;  ///< P(sup_{s <= C T} Z_s < eps^2), the lower bound
  double eps = 0.0;
};

/// Monte Carlo estimate of the small-ball probability together with its
/// squared-Bessel lower bound; both carry 95% Wilson intervals. The companion
/// bound may run on fewer paths (besq_paths <= 0 means n_paths).
SupportProbabilityReport support_probability(const VolatilitySpec& vol,
                                             const TimeGrid& grid, double eps,
                                             long n_paths, double c, double big_c,
                                             RngStream rng, long besq_paths = 0);

struct CfsEstimate {
  WilsonInterval prob;
  long n_paths = 0;
};

/// Estimates P(sup_{[t,T]} |S - f| < eta_tube) by resimulating continuations
/// from the prefix end; a strictly positive estimate across a family of
/// targets is the statistical rendering of conditional full support.
CfsEstimate cfs_probe(const PathModel& model, const TimeGrid& grid,
                      const Eigen::MatrixXd& prefix, int t_index,
                      const Eigen::MatrixXd& target, double eta_tube,
                      long n_paths, RngStream rng);

}  // namespace divmkt
