#pragma once

#include <Eigen/Dense>

namespace divmkt {

/// Largest market weight max_i x_i / sum(x). Caller guarantees sum(x) > 0.
double max_weight(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Index of the largest coordinate, lowest index winning ties
/// (strict against smaller indices, non-strict against larger ones).
int max_weight_index(const Eigen::Ref<const Eigen::VectorXd>& x);

/// The open set O(delta) of strictly positive price vectors whose largest
/// market weight stays below 1-delta.
class DiversityRegion {
 public:
  DiversityRegion(double delta, int assets);

  double delta() const noexcept { return delta_; }
  int assets() const noexcept { return assets_; }
  double threshold() const noexcept { return 1.0 - delta_; }

  /// O(delta) is non-empty iff 1-delta > 1/n.
  bool empty() const noexcept;

  /// Strict membership: all coordinates positive and max weight < 1-delta.
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  double delta_;
  int assets_;
};

/// Euclidean distance from a strictly positive vector to the complement of
/// O(delta) in R^n.
///
/// The complement is the finite union of the closed half-spaces
/// {y : y_i <= 0} and {y : y_i >= (1-delta) * sum(y)}, so the distance is the
/// minimum of exact linear projection distances. Returns 0 when x lies
/// outside O (in particular whenever O is empty).
double dist_to_complement(const Eigen::Ref<const Eigen::VectorXd>& x,
                          const DiversityRegion& region);

}  // namespace divmkt
