#include "divmkt/hull.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "divmkt/errors.hpp"

namespace divmkt {
namespace detail {

namespace {
// A wide gap between the entering and pivoting thresholds keeps numerical
// noise in reduced costs from being mistaken for an unbounded ray.
constexpr double kEnterTol = 1e-8;
constexpr double kPivotTol = 1e-10;

// One simplex phase on the working tableau. Row 0 carries z_j - c_j and the
// objective value in the last column. Returns false on unboundedness.
bool run_phase(Eigen::MatrixXd& t, std::vector<int>& basis, int n_cols) {
  const int m = static_cast<int>(t.rows()) - 1;
  for (int iter = 0; iter < 50000; ++iter) {
    int enter = -1;
    for (int j = 0; j < n_cols; ++j) {
      if (t(0, j) < -kEnterTol) {  // Bland: first improving column
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;  // optimal
    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 1; i <= m; ++i) {
      if (t(i, enter) > kPivotTol) {
        const double ratio = t(i, n_cols) / t(i, enter);
        if (leave < 0 || ratio < best_ratio - kPivotTol ||
            (std::abs(ratio - best_ratio) <= kPivotTol &&
             basis[i - 1] < basis[leave - 1])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) return false;  // unbounded
    t.row(leave) /= t(leave, enter);
    for (int i = 0; i < static_cast<int>(t.rows()); ++i) {
      if (i != leave && std::abs(t(i, enter)) > 0.0)
        t.row(i) -= t(i, enter) * t.row(leave);
    }
    basis[leave - 1] = enter;
  }
  throw NumericalFailure("simplex_max: iteration budget exhausted");
}
}  // namespace

SimplexResult simplex_max(const Eigen::MatrixXd& a_in, const Eigen::VectorXd& b_in,
                          const Eigen::VectorXd& c) {
  const int m = static_cast<int>(a_in.rows());
  const int n = static_cast<int>(a_in.cols());
  if (b_in.size() != m || c.size() != n)
    throw std::invalid_argument("simplex_max: dimension mismatch");

  Eigen::MatrixXd a = a_in;
  Eigen::VectorXd b = b_in;
  for (int i = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      a.row(i) = -a.row(i);
      b[i] = -b[i];
    }
  }

  // Phase 1 tableau: [A | I | b] with artificial basis, maximize -sum(art).
  const int total = n + m;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, total + 1);
  t.block(1, 0, m, n) = a;
  t.block(1, n, m, m).setIdentity();
  t.block(1, total, m, 1) = b;
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;
  // Row 0 = z - c for phase-1 costs (0 on real, -1 on artificial columns).
  for (int j = 0; j < n; ++j) t(0, j) = -a.col(j).sum();
  t(0, total) = -b.sum();

  if (!run_phase(t, basis, total))
    throw NumericalFailure("simplex_max: phase 1 unbounded");
  if (t(0, total) < -1e-7) {
    return SimplexResult{SimplexResult::Status::kInfeasible, 0.0,
                         Eigen::VectorXd::Zero(n)};
  }

  // Drive any remaining artificial out of the basis, dropping redundant rows.
  std::vector<int> keep_rows;
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) {
      keep_rows.push_back(i);
      continue;
    }
    int pivot_col = -1;
    for (int j = 0; j < n; ++j) {
      if (std::abs(t(i + 1, j)) > 1e-8) {
        pivot_col = j;
        break;
      }
    }
    if (pivot_col < 0) continue;  // redundant constraint
    t.row(i + 1) /= t(i + 1, pivot_col);
    for (int r = 0; r < static_cast<int>(t.rows()); ++r) {
      if (r != i + 1 && std::abs(t(r, pivot_col)) > 0.0)
        t.row(r) -= t(r, pivot_col) * t.row(i + 1);
    }
    basis[i] = pivot_col;
    keep_rows.push_back(i);
  }

  const int m2 = static_cast<int>(keep_rows.size());
  Eigen::MatrixXd t2 = Eigen::MatrixXd::Zero(m2 + 1, n + 1);
  std::vector<int> basis2(m2);
  for (int i = 0; i < m2; ++i) {
    t2.block(i + 1, 0, 1, n) = t.block(keep_rows[i] + 1, 0, 1, n);
    t2(i + 1, n) = t(keep_rows[i] + 1, total);
    basis2[i] = basis[keep_rows[i]];
  }
  // Phase 2 objective row from the real costs.
  for (int j = 0; j < n; ++j) {
    double z = 0.0;
    for (int i = 0; i < m2; ++i) z += c[basis2[i]] * t2(i + 1, j);
    t2(0, j) = z - c[j];
  }
  double val = 0.0;
  for (int i = 0; i < m2; ++i) val += c[basis2[i]] * t2(i + 1, n);
  t2(0, n) = val;

  if (!run_phase(t2, basis2, n)) {
    return SimplexResult{SimplexResult::Status::kUnbounded, 0.0,
                         Eigen::VectorXd::Zero(n)};
  }
  SimplexResult res{SimplexResult::Status::kOptimal, t2(0, n),
                    Eigen::VectorXd::Zero(n)};
  for (int i = 0; i < m2; ++i) res.x[basis2[i]] = t2(i + 1, n);
  return res;
}

}  // namespace detail

HullInteriorResult origin_in_hull_interior(const Eigen::MatrixXd& points) {
  HullInteriorResult out;
  const int k = static_cast<int>(points.rows());
  const int n = static_cast<int>(points.cols());
  if (k == 0 || n == 0) return out;

  const double scale = points.rowwise().norm().maxCoeff();
  if (scale == 0.0) return out;  // all points at the origin
  const Eigen::MatrixXd p = points / scale;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(p);
  qr.setThreshold(1e-9);
  out.rank = static_cast<int>(qr.rank());

  // Variables: s_1..s_k >= 0, t+ >= 0, t- >= 0 with lambda_i = s_i + (t+ - t-).
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, k + 2);
  a.block(0, 0, n, k) = p.transpose();
  a.block(0, k, n, 1) = p.colwise().sum().transpose();
  a.block(0, k + 1, n, 1) = -p.colwise().sum().transpose();
  a.row(n).head(k).setOnes();
  a(n, k) = static_cast<double>(k);
  a(n, k + 1) = -static_cast<double>(k);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b[n] = 1.0;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k + 2);
  c[k] = 1.0;
  c[k + 1] = -1.0;

  const auto res = detail::simplex_max(a, b, c);
  if (res.status != detail::SimplexResult::Status::kOptimal) return out;
  out.feasible = true;
  out.margin = res.objective;  // barycentric weights are scale-invariant
  out.interior = res.objective > 1e-9 && out.rank == n;
  const double t_star = res.x[k] - res.x[k + 1];
  out.weights = res.x.head(k).array() + t_star;
  return out;
}

}  // namespace divmkt
