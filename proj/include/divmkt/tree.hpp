#pragma once

#include <Eigen/Dense>
#include <vector>

#include "divmkt/cps.hpp"
#include "divmkt/path_model.hpp"
#include "divmkt/region.hpp"
#include "divmkt/rng.hpp"
#include "divmkt/tilt.hpp"

namespace divmkt {

/// One walk step sampled as a fresh continuation from a pivot: the path is
/// advanced until the first grid index whose move out of the eps/2-ball
/// triggers, or until the horizon (retirement).
struct WalkChild {
  int end_index = 0;            ///< tau_{n+1} on the grid
  bool retired = false;         ///< end_index == N without a trigger
  Eigen::VectorXd pivot;        ///< sphere point at triggers; empty when retired
  Eigen::VectorXd end_price;    ///< S(t_{end_index})
  Eigen::MatrixXd segment;      ///< prices on rows k0..end_index
  Eigen::VectorXd eps_segment;  ///< running-min epsilon on the same rows
  double eps_end = 0.0;         ///< epsilon state at end_index
  double overshoot = 0.0;
};

/// Samples one continuation of the retirement walk from (k0, price0) with
/// epsilon carried in as the running minimum through k0.
WalkChild sample_walk_child(const PathModel& model, const TimeGrid& grid, int k0,
                            const Eigen::VectorXd& price0, double eps_in,
                            double eta, const DiversityRegion& region,
                            RngStream rng);

struct TreeNode {
  int id = 0;
  int parent = -1;
  int depth = 0;
  int grid_index = 0;
  bool retired = false;
  Eigen::VectorXd pivot;        ///< X_n
  Eigen::VectorXd price;        ///< S(t_{grid_index}) on this branch
  Eigen::MatrixXd segment;      ///< prices on rows parent.grid_index..grid_index
  Eigen::VectorXd eps_segment;  ///< epsilon on the same rows
  double eps_state = 0.0;
  Eigen::VectorXd delta;        ///< pivot - parent pivot (size 0 at the root)
  std::vector<int> children;
  Eigen::VectorXd p;            ///< original child weights
  Eigen::VectorXd q;            ///< tilted child weights (after martingale_tilt)
  double mart_residual = 0.0;
  double sum_q_dd = 0.0;
  bool budget_relaxed = false;
  Eigen::VectorXd shadow;       ///< filled by shadow_price
};

/// A finite scenario tree of walk increments with original and tilted child
/// probabilities.
struct TiltedTree {
  TimeGrid grid{1.0, 1};
  double eta = 0.0;
  DiversityRegion region{0.5, 2};
  int depth = 0;
  int branching = 0;
  std::vector<TreeNode> nodes;  ///< breadth-first order, node 0 is the root
  bool tilted = false;

  const TreeNode& root() const { return nodes.front(); }
};

struct TreeParams {
  int depth = 3;
  int branching = 8;
  double eta = 0.01;
  DiversityRegion region{0.5, 2};
  /// Child bundles whose increments fail the hull condition are resampled
  /// this many times before giving up; a finite sample can miss the interior
  /// even when the conditional support satisfies it.
  int max_resample = 64;
};

/// Builds the scenario tree by sampling `branching` walk continuations from
/// every node up to `depth`. Original child weights are uniform.
TiltedTree build_scenario_tree(const PathModel& model, const TimeGrid& grid,
                               const TreeParams& params, RngStream rng);

/// Re-weights every internal node's children to conditional mean zero by
/// minimal relative entropy. The squared-increment budget at depth m is
/// 2^-(budget_exponent + m) times the node's squared increment scale, halving
/// level by level; retirement children, where present, keep at least
/// `retirement_floor` of the tilted mass.
void martingale_tilt(TiltedTree& tree, double retirement_floor = 0.5,
                     int budget_exponent = 1,
                     double mart_tol = 1e-13);

struct ShadowReport {
  double max_mart_gap = 0.0;    ///< max |shadow - pivot| over internal nodes
  double max_tube_slack = 0.0;  ///< max |S - shadow| - eps over all segments
  long tube_points = 0;
};

/// Backward induction S~ = sum_k q_k S~(child k); by the martingale property
/// the internal value reproduces the node pivot, which is asserted, and the
/// tube |S(t) - S~| <= eps(t) is re-checked along every branch.
/// Throws NumericalFailure when the martingale gap exceeds mart_tol
/// (relative to the price scale).
ShadowReport shadow_price(TiltedTree& tree, double mart_tol = 1e-10);

struct SupportProbeReport {
  long samples = 0;
  long retirements = 0;
  double retirement_prob = 0.0;
  double delta_star = 0.0;          ///< eps0 / (4 + 2 L0)
  bool hull_interior = false;
  double hull_margin = 0.0;
  std::vector<double> coverage;     ///< per tested coordinate plane
  double coverage_min = 0.0;
  double coverage_avg = 0.0;
  bool conclusive = false;
};

/// Samples pivot increments X1 - X0 from fresh continuations, projects them
/// onto the sphere of radius delta_star = eps0/(4+2 L0), and reports
/// (a) the empirical retirement probability, (b) how much of a uniform
/// direction grid the projected samples cover within theta_cov, per
/// coordinate plane, and (c) whether 0 lies in the interior of the convex
/// hull of the sampled increments (exact LP test).
SupportProbeReport increment_support_probe(const PathModel& model,
                                           const TimeGrid& grid, int pivot_index,
                                           const Eigen::VectorXd& pivot_price,
                                           double eps0, double l0, double eta,
                                           const DiversityRegion& region,
                                           long n_samples, double theta_cov,
                                           RngStream rng);

}  // namespace divmkt
