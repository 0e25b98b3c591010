#pragma once

#include <Eigen/Dense>

namespace divmkt {

/// Exact test for 0 in the interior of conv{rows of points}.
///
/// Solves the LP  max t  s.t.  sum_k lambda_k * p_k = 0, sum_k lambda_k = 1,
/// lambda_k >= t; the optimum is positive exactly when 0 lies in the relative
/// interior, and full topological interior additionally needs the points to
/// span R^n.
struct HullInteriorResult {
  bool interior = false;
  double margin = 0.0;  ///< LP optimum: best uniform barycentric floor
  int rank = 0;         ///< numerical rank of the point set
  bool feasible = false;
  /// Barycentric weights achieving the margin: all >= margin, sum to 1,
  /// and combine the points to the origin.
  Eigen::VectorXd weights;
};

HullInteriorResult origin_in_hull_interior(const Eigen::MatrixXd& points);

namespace detail {

/// Dense two-phase primal simplex for  max c'x  s.t.  Ax = b, x >= 0.
/// Bland's rule; built for a handful of rows and up to a few thousand columns.
struct SimplexResult {
  enum class Status { kOptimal, kInfeasible, kUnbounded } status;
  double objective = 0.0;
  Eigen::VectorXd x;
};

SimplexResult simplex_max(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c);

}  // namespace detail

}  // namespace divmkt
