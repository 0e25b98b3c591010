#pragma once

#include <Eigen/Dense>
#include <vector>

namespace divmkt {

struct NodeTiltOptions {
  double retirement_floor = 0.5;  ///< min tilted mass on retirement children
  double budget = std::numeric_limits<double>::infinity();  ///< cap on sum q |Delta|^2
  double mart_tol = 1e-13;        ///< Newton target for |sum q Delta| (relative)
  double q_floor = 1e-11;         ///< never push any child weight below this
  int max_newton = 300;
};

struct NodeTiltResult {
  Eigen::VectorXd q;
  double mart_residual = 0.0;  ///< |sum q Delta| after the solve
  double sum_q_dd = 0.0;       ///< sum q |Delta|^2 achieved
  bool budget_relaxed = false;
  double beta = 0.0;           ///< quadratic tilt strength used
  int newton_iters = 0;
};

/// Minimal relative-entropy re-weighting of one node's child probabilities:
///   min sum q_k log(q_k / p_k)
///   s.t. sum q_k = 1, sum q_k Delta_k = 0,
///        sum over retirement children q_k >= retirement_floor (when any exist),
///        sum q_k |Delta_k|^2 <= budget.
/// Entropy keeps every q_k strictly positive, which is what makes the tilted
/// measure equivalent to the original.
///
/// Preconditions: either all increments vanish (q = p is returned) or the
/// origin lies in the interior of the convex hull of the increments; a hull
/// failure throws NoTiltExists. An unreachable budget is relaxed to the
/// smallest value attainable without crushing any weight below q_floor, and
/// the relaxation is reported.
NodeTiltResult tilt_node(const Eigen::MatrixXd& deltas, const Eigen::VectorXd& p,
                         const std::vector<unsigned char>& retirement,
                         const NodeTiltOptions& options = {});

}  // namespace divmkt
