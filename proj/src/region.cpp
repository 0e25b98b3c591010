#include "divmkt/region.hpp"

#include <cmath>
#include <stdexcept>

namespace divmkt {

double max_weight(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return x.maxCoeff() / x.sum();
}

int max_weight_index(const Eigen::Ref<const Eigen::VectorXd>& x) {
  int best = 0;
  for (int i = 1; i < x.size(); ++i)
    if (x[i] > x[best]) best = i;
  return best;
}

DiversityRegion::DiversityRegion(double delta, int assets)
    : delta_(delta), assets_(assets) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("DiversityRegion: delta must be in (0,1)");
  if (assets < 1)
    throw std::invalid_argument("DiversityRegion: need at least one asset");
}

bool DiversityRegion::empty() const noexcept {
  return !(1.0 - delta_ > 1.0 / assets_);
}

bool DiversityRegion::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != assets_)
    throw std::invalid_argument("DiversityRegion: dimension mismatch");
  if (!(x.minCoeff() > 0.0)) return false;
  return max_weight(x) < threshold();
}

double dist_to_complement(const Eigen::Ref<const Eigen::VectorXd>& x,
                          const DiversityRegion& region) {
  const int n = region.assets();
  if (x.size() != n)
    throw std::invalid_argument("dist_to_complement: dimension mismatch");
  if (!(x.minCoeff() > 0.0))
    throw std::domain_error("dist_to_complement: coordinates must be positive");

  const double c = region.threshold();
  const double total = x.sum();
  // |e_i - c*1| is the same for every i.
  const double normal_len =
      std::sqrt((1.0 - c) * (1.0 - c) + (n - 1) * c * c);

  double best = x.minCoeff();  // distance to the nearest {y_i <= 0}
  for (int i = 0; i < n; ++i) {
    const double gap = c * total - x[i];  // <= 0 means x already in {mu_i >= 1-delta}
    if (gap <= 0.0) return 0.0;
    best = std::min(best, gap / normal_len);
  }
  return best;
}

}  // namespace divmkt
