#include "divmkt/tilt.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "divmkt/errors.hpp"
#include "divmkt/hull.hpp"

namespace divmkt {

namespace {

struct InnerState {
  Eigen::VectorXd q;
  Eigen::VectorXd mart;     // sum q Delta
  double retirement_mass = 0.0;
  double sum_q_dd = 0.0;
  int iters = 0;
};

Eigen::VectorXd weights_for(const Eigen::MatrixXd& deltas, const Eigen::VectorXd& log_p,
                            const Eigen::VectorXd& dd,
                            const Eigen::VectorXd& r_mask, const Eigen::VectorXd& lambda,
                            double alpha, double beta) {
  Eigen::VectorXd e = deltas * lambda + alpha * r_mask - beta * dd + log_p;
  const double shift = e.maxCoeff();
  Eigen::VectorXd q = (e.array() - shift).exp();
  q /= q.sum();
  return q;
}

// Damped Newton on the dual variables. `with_alpha` additionally pins the
// retirement mass to `floor` (the inequality activated as an equality).
InnerState solve_inner(const Eigen::MatrixXd& deltas, const Eigen::VectorXd& log_p,
                       const Eigen::VectorXd& dd, const Eigen::VectorXd& r_mask,
                       double beta, bool with_alpha, double floor, double scale,
                       const NodeTiltOptions& opt) {
  const int n = static_cast<int>(deltas.cols());
  const int dim = with_alpha ? n + 1 : n;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
  double alpha = 0.0;

  const auto residual = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd f(dim);
    f.head(n) = deltas.transpose() * q;
    if (with_alpha) f[n] = r_mask.dot(q) - floor;
    return f;
  };

  Eigen::VectorXd q = weights_for(deltas, log_p, dd, r_mask, lambda, alpha, beta);
  Eigen::VectorXd f = residual(q);
  const double tol = opt.mart_tol * scale;
  int iter = 0;
  for (; iter < opt.max_newton; ++iter) {
    const double fn = f.norm();
    const bool mart_ok = f.head(n).norm() <= tol;
    const bool mass_ok = !with_alpha || std::abs(f[n]) <= 1e-13;
    if (mart_ok && mass_ok) break;

    // Jacobian = covariance of (Delta, r) under q.
    Eigen::MatrixXd j(dim, dim);
    const Eigen::VectorXd mean_delta = deltas.transpose() * q;
    j.topLeftCorner(n, n) =
        deltas.transpose() * q.asDiagonal() * deltas - mean_delta * mean_delta.transpose();
    if (with_alpha) {
      const double mean_r = r_mask.dot(q);
      const Eigen::VectorXd cross =
          deltas.transpose() * (q.array() * r_mask.array()).matrix() - mean_delta * mean_r;
      j.block(0, n, n, 1) = cross;
      j.block(n, 0, 1, n) = cross.transpose();
      j(n, n) = mean_r - mean_r * mean_r;
    }
    j.diagonal().array() += 1e-14 * (1.0 + j.trace());

    const Eigen::VectorXd step = j.ldlt().solve(-f);
    double damp = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::VectorXd lam_try = lambda + damp * step.head(n);
      const double alpha_try = with_alpha ? alpha + damp * step[n] : 0.0;
      const Eigen::VectorXd q_try =
          weights_for(deltas, log_p, dd, r_mask, lam_try, alpha_try, beta);
      const Eigen::VectorXd f_try = residual(q_try);
      if (f_try.norm() < fn * (1.0 - 1e-4 * damp) || f_try.norm() < tol) {
        lambda = lam_try;
        alpha = alpha_try;
        q = q_try;
        f = f_try;
        improved = true;
        break;
      }
      damp *= 0.5;
    }
    if (!improved)
      throw NumericalFailure("tilt_node: Newton stalled on the dual");
  }
  if (iter >= opt.max_newton)
    throw NumericalFailure("tilt_node: Newton iteration budget exhausted");

  InnerState st;
  st.q = q;
  st.mart = deltas.transpose() * q;
  st.retirement_mass = r_mask.dot(q);
  st.sum_q_dd = dd.dot(q);
  st.iters = iter;
  return st;
}

// Full inner solve: plain Newton first, retirement floor activated only when
// the unconstrained optimum undershoots it.
InnerState solve_with_floor(const Eigen::MatrixXd& deltas, const Eigen::VectorXd& log_p,
                            const Eigen::VectorXd& dd, const Eigen::VectorXd& r_mask,
                            double beta, bool has_retirement, bool all_retirement,
                            double scale, const NodeTiltOptions& opt) {
  InnerState st = solve_inner(deltas, log_p, dd, r_mask, beta, false, 0.0, scale, opt);
  if (has_retirement && !all_retirement &&
      st.retirement_mass < opt.retirement_floor - 1e-12) {
    st = solve_inner(deltas, log_p, dd, r_mask, beta, true, opt.retirement_floor,
                     scale, opt);
  }
  return st;
}

}  // namespace

NodeTiltResult tilt_node(const Eigen::MatrixXd& deltas, const Eigen::VectorXd& p,
                         const std::vector<unsigned char>& retirement,
                         const NodeTiltOptions& options) {
  const int k = static_cast<int>(deltas.rows());
  if (k < 1) throw std::invalid_argument("tilt_node: no children");
  if (p.size() != k || retirement.size() != static_cast<std::size_t>(k))
    throw std::invalid_argument("tilt_node: size mismatch");
  if (!(p.minCoeff() > 0.0))
    throw std::invalid_argument("tilt_node: original weights must be positive");
  if (!(options.retirement_floor > 0.0 && options.retirement_floor < 1.0))
    throw std::invalid_argument("tilt_node: retirement floor must be in (0,1)");

  Eigen::VectorXd pn = p / p.sum();
  const Eigen::VectorXd log_p = pn.array().log();
  const Eigen::VectorXd dd = deltas.rowwise().squaredNorm();
  Eigen::VectorXd r_mask(k);
  bool has_retirement = false, all_retirement = true;
  for (int i = 0; i < k; ++i) {
    r_mask[i] = retirement[i] ? 1.0 : 0.0;
    has_retirement |= retirement[i] != 0;
    all_retirement &= retirement[i] != 0;
  }

  NodeTiltResult out;
  const double max_dd = dd.maxCoeff();
  if (max_dd == 0.0) {
    // Every increment vanishes: no constraint binds and entropy keeps q = p.
    out.q = pn;
    return out;
  }
  const double scale = std::sqrt(max_dd);

  const auto hull = origin_in_hull_interior(deltas);
  if (!hull.interior)
    throw NoTiltExists(
        "tilt_node: origin not in the interior of the increment hull");

  InnerState st = solve_with_floor(deltas, log_p, dd, r_mask, 0.0, has_retirement,
                                   all_retirement, scale, options);
  double beta = 0.0;
  int iters = st.iters;

  if (st.sum_q_dd > options.budget) {
    // Quadratic tilt: grow beta until the budget is met or the weights would
    // be crushed below the positivity floor (or the dual degenerates), then
    // refine by bisection. A beta that cannot be solved is simply unsafe.
    const auto try_solve = [&](double b) -> std::optional<InnerState> {
      try {
        InnerState cand = solve_with_floor(deltas, log_p, dd, r_mask, b,
                                           has_retirement, all_retirement, scale,
                                           options);
        iters += cand.iters;
        if (cand.q.minCoeff() < options.q_floor) return std::nullopt;
        return cand;
      } catch (const NumericalFailure&) {
        return std::nullopt;
      }
    };

    double lo = 0.0;
    InnerState lo_st = st;
    double hi = -1.0;
    InnerState hi_st;
    double b = 1.0 / max_dd;
    bool met = false;
    double prev = st.sum_q_dd;
    for (int j = 0; j < 60; ++j) {
      const auto cand = try_solve(b);
      if (!cand) break;
      if (cand->sum_q_dd <= options.budget) {
        hi = b;
        hi_st = *cand;
        met = true;
        break;
      }
      if (cand->sum_q_dd > prev * (1.0 - 1e-12)) {  // plateau: budget unreachable
        lo = b;
        lo_st = *cand;
        break;
      }
      prev = cand->sum_q_dd;
      lo = b;
      lo_st = *cand;
      b *= 4.0;
    }
    if (met) {
      // Smallest beta meeting the budget, to stay closest to pure entropy.
      for (int j = 0; j < 40 && hi - lo > 1e-3 * hi; ++j) {
        const double mid = 0.5 * (lo + hi);
        const auto cand = try_solve(mid);
        if (cand && cand->sum_q_dd <= options.budget) {
          hi = mid;
          hi_st = *cand;
        } else {
          lo = mid;
        }
      }
      st = hi_st;
      beta = hi;
    } else {
      st = lo_st;
      beta = lo;
      out.budget_relaxed = true;
    }
  }

  // Entropy does not penalize small weights, so a legitimate optimum can sit
  // below the positivity floor. Blending in a drop of the LP's interior
  // barycentric point keeps both linear constraints exact and lifts every
  // weight above the floor while moving the distribution by O(1e-8).
  if (st.q.minCoeff() < 10.0 * options.q_floor && hull.weights.size() == k) {
    const double w = std::min(1e-6, 10.0 * options.q_floor / hull.margin);
    st.q = (1.0 - w) * st.q + w * hull.weights;
    st.q /= st.q.sum();
    st.mart = deltas.transpose() * st.q;
    st.retirement_mass = r_mask.dot(st.q);
    st.sum_q_dd = dd.dot(st.q);
  }

  out.q = st.q;
  out.mart_residual = st.mart.norm();
  out.sum_q_dd = st.sum_q_dd;
  out.beta = beta;
  out.newton_iters = iters;
  return out;
}

}  // namespace divmkt
