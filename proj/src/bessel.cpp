#include "divmkt/bessel.hpp"

#include <cmath>
#include <stdexcept>

#include "divmkt/errors.hpp"
#include "divmkt/parallel.hpp"

namespace divmkt {

RadialDecomposition radial_decompose(const Eigen::MatrixXd& x_path,
                                     const TimeGrid& grid,
                                     const VolatilitySpec& vol, double c,
                                     double big_c) {
  const int n_steps = grid.steps();
  const int d = static_cast<int>(x_path.cols());
  if (x_path.rows() != grid.points())
    throw std::invalid_argument("radial_decompose: row count mismatch");
  if (!(c > 0.0) || !(big_c >= c))
    throw std::invalid_argument("radial_decompose: need 0 < c <= C");
  const double dt = grid.dt();

  RadialDecomposition out;
  out.r.resize(n_steps + 1);
  out.qvar_n.resize(n_steps + 1);
  out.beta_increments.resize(n_steps);
  out.b.resize(n_steps);
  out.qvar_n[0] = 0.0;

  for (int k = 0; k <= n_steps; ++k) out.r[k] = x_path.row(k).squaredNorm();

  Eigen::VectorXd unit(d);
  for (int k = 0; k < n_steps; ++k) {
    const Eigen::VectorXd x = x_path.row(k);
    const double len = x.norm();
    if (len > 0.0) {
      unit = x / len;
    } else {
      unit.setZero();
      unit[0] = 1.0;  // radial direction convention at the origin
    }
    const Eigen::MatrixXd sigma = vol.eval(grid.time(k), x);
    const double quad = (sigma.transpose() * unit).squaredNorm();  // unit' a unit
    const double dq = quad * dt;
    const double tol = 1e-9 * dt * big_c;
    if (dq < c * dt - tol || dq > big_c * dt + tol)
      throw ModelContractViolation(
          "radial_decompose: clock increment outside [c dt, C dt] at step " +
          std::to_string(k));
    out.qvar_n[k + 1] = out.qvar_n[k] + dq;
    out.beta_increments[k] = unit.dot(x_path.row(k + 1).transpose() - x);
    const double trace_a = sigma.squaredNorm();  // Tr(sigma sigma') = |sigma|_F^2
    out.b[k] = trace_a * dt / dq;
    if (out.b[k] < -1e-12 || out.b[k] > big_c * d / c + 1e-9)
      throw ModelContractViolation("radial_decompose: effective drift out of range");
  }
  return out;
}

void BesqParams::validate() const {
  if (!(c > 0.0) || !(big_c >= c) || drivers < 1)
    throw std::invalid_argument("BesqParams: need 0 < c <= C and d >= 1");
  if (!(dimension >= drivers * big_c / c))
    throw std::invalid_argument("BesqParams: dimension must be >= d C / c");
}

Eigen::VectorXd besq_simulate(double dimension, const TimeGrid& grid, RngStream rng) {
  if (dimension < 0.0)
    throw std::invalid_argument("besq_simulate: dimension must be nonnegative");
  const int n_steps = grid.steps();
  const double dt = grid.dt();
  const double sdt = std::sqrt(dt);
  Eigen::VectorXd z(n_steps + 1);
  z[0] = 0.0;
  double cur = 0.0;
  for (int k = 0; k < n_steps; ++k) {
    cur = cur + 2.0 * std::sqrt(std::max(cur, 0.0)) * sdt * rng.normal() +
          dimension * dt;
    cur = std::max(cur, 0.0);
    z[k + 1] = cur;
  }
  return z;
}

Eigen::VectorXd besq_on_clock(double dimension,
                              const Eigen::VectorXd& beta_increments,
                              const Eigen::VectorXd& clock_increments) {
  if (beta_increments.size() != clock_increments.size())
    throw std::invalid_argument("besq_on_clock: increment size mismatch");
  const int n = static_cast<int>(beta_increments.size());
  Eigen::VectorXd z(n + 1);
  z[0] = 0.0;
  double cur = 0.0;
  if (dimension >= 1.0) {
    // Milstein form (sqrt(Z) + dbeta)^2 + (dim-1) ds: nonnegative without any
    // clamp, and for dim = 1 it reproduces the square recursion of the driving
    // radius exactly, which is what a sharp pathwise coupling needs.
    for (int k = 0; k < n; ++k) {
      const double root = std::sqrt(cur) + beta_increments[k];
      cur = root * root + (dimension - 1.0) * clock_increments[k];
      z[k + 1] = cur;
    }
  } else {
    for (int k = 0; k < n; ++k) {
      cur = cur + 2.0 * std::sqrt(std::max(cur, 0.0)) * beta_increments[k] +
            dimension * clock_increments[k];
      cur = std::max(cur, 0.0);
      z[k + 1] = cur;
    }
  }
  return z;
}

DominationReport coupled_comparison(const Eigen::MatrixXd& x_path,
                                    const TimeGrid& grid,
                                    const VolatilitySpec& vol,
                                    const BesqParams& params, double tol_cmp) {
  params.validate();
  const RadialDecomposition rad = radial_decompose(x_path, grid, vol, params.c,
                                                   params.big_c);
  const int n_steps = grid.steps();
  Eigen::VectorXd clock_inc(n_steps);
  for (int k = 0; k < n_steps; ++k)
    clock_inc[k] = rad.qvar_n[k + 1] - rad.qvar_n[k];
  if ((clock_inc.array() <= 0.0).any())
    throw NumericalFailure("coupled_comparison: clock is not increasing");

  const Eigen::VectorXd z =
      besq_on_clock(params.dimension, rad.beta_increments, clock_inc);

  // On the clock grid s_k = <N>(t_k) the time-changed R~ is simply R.
  DominationReport rep;
  rep.tol = tol_cmp;
  rep.points = n_steps + 1;
  rep.max_diff = -std::numeric_limits<double>::infinity();
  long dominated = 0;
  for (int k = 0; k <= n_steps; ++k) {
    const double diff = rad.r[k] - z[k];
    rep.max_diff = std::max(rep.max_diff, diff);
    rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(diff));
    if (diff <= tol_cmp) ++dominated;
  }
  rep.frac_dominated = static_cast<double>(dominated) / rep.points;
  return rep;
}

Eigen::MatrixXd simulate_martingale(const TimeGrid& grid, const VolatilitySpec& vol,
                                    RngStream rng) {
  const int n = vol.assets();
  const int d = vol.drivers();
  const double sdt = std::sqrt(grid.dt());
  Eigen::MatrixXd x(grid.points(), n);
  x.row(0).setZero();
  Eigen::VectorXd cur = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z(d);
  const bool const_vol = vol.constant_form();
  for (int k = 0; k < grid.steps(); ++k) {
    for (int j = 0; j < d; ++j) z[j] = rng.normal();
    if (const_vol) {
      cur.noalias() += vol.matrix() * (sdt * z);
    } else {
      cur.noalias() += vol.eval(grid.time(k), cur) * (sdt * z);
    }
    if (!cur.allFinite())
      throw SimulationDiverged("simulate_martingale: non-finite state", k + 1);
    x.row(k + 1) = cur;
  }
  return x;
}

SupportProbabilityReport support_probability(const VolatilitySpec& vol,
                                             const TimeGrid& grid, double eps,
                                             long n_paths, double c, double big_c,
                                             RngStream rng, long besq_paths) {
  if (!(eps > 0.0))
    throw std::invalid_argument("support_probability: eps must be positive");
  if (n_paths < 1)
    throw std::invalid_argument("support_probability: n_paths >= 1");
  if (besq_paths <= 0) besq_paths = n_paths;

  const int n = vol.assets();
  const int d = vol.drivers();
  const double sdt = std::sqrt(grid.dt());
  const double eps2 = eps * eps;
  const bool const_vol = vol.constant_form();
  const bool scalar_fast = const_vol && n == 1 && d == 1;
  const double scalar_sigma = scalar_fast ? vol.matrix()(0, 0) : 0.0;

  std::vector<unsigned char> inside(n_paths, 0);
  RngStream base_x = rng.substream(1);
  parallel_for(n_paths, [&](long i) {
    RngStream path_rng = base_x.substream(i);
    if (scalar_fast) {
      // Streaming scalar walk; nothing is stored.
      double x = 0.0;
      const double step = scalar_sigma * sdt;
      bool ok = true;
      for (int k = 0; k < grid.steps(); ++k) {
        x += step * path_rng.normal();
        if (std::abs(x) > eps) {
          ok = false;
          break;
        }
      }
      inside[i] = ok ? 1 : 0;
    } else {
      Eigen::VectorXd cur = Eigen::VectorXd::Zero(n);
      Eigen::VectorXd z(d);
      bool ok = true;
      for (int k = 0; k < grid.steps() && ok; ++k) {
        for (int j = 0; j < d; ++j) z[j] = path_rng.normal();
        if (const_vol) {
          cur.noalias() += vol.matrix() * (sdt * z);
        } else {
          cur.noalias() += vol.eval(grid.time(k), cur) * (sdt * z);
        }
        ok = cur.squaredNorm() <= eps2;
      }
      inside[i] = ok ? 1 : 0;
    }
  });
  long hits = 0;
  for (unsigned char b : inside) hits += b;

  SupportProbabilityReport rep;
  rep.eps = eps;
  rep.direct = wilson_interval(hits, n_paths);

  // Lower bound: BESQ(d C / c) staying below eps^2 on [0, C T].
  const double dim = d * big_c / c;
  const TimeGrid besq_grid(big_c * grid.horizon(),
                           static_cast<int>(std::ceil(big_c * grid.steps())));
  std::vector<unsigned char> below(besq_paths, 0);
  RngStream base_z = rng.substream(2);
  parallel_for(besq_paths, [&](long i) {
    RngStream path_rng = base_z.substream(i);
    const double dt = besq_grid.dt();
    const double sq = std::sqrt(dt);
    double cur = 0.0;
    bool ok = true;
    for (int k = 0; k < besq_grid.steps(); ++k) {
      cur = cur + 2.0 * std::sqrt(std::max(cur, 0.0)) * sq * path_rng.normal() +
            dim * dt;
      cur = std::max(cur, 0.0);
      if (cur >= eps2) {
        ok = false;
        break;
      }
    }
    below[i] = ok ? 1 : 0;
  });
  long z_hits = 0;
  for (unsigned char b : below) z_hits += b;
  rep.besq_bound = wilson_interval(z_hits, besq_paths);
  return rep;
}

CfsEstimate cfs_probe(const PathModel& model, const TimeGrid& grid,
                      const Eigen::MatrixXd& prefix, int t_index,
                      const Eigen::MatrixXd& target, double eta_tube,
                      long n_paths, RngStream rng) {
  if (t_index < 0 || t_index >= grid.steps())
    throw std::invalid_argument("cfs_probe: t_index must precede the horizon");
  if (prefix.rows() != t_index + 1 || prefix.cols() != model.assets())
    throw std::invalid_argument("cfs_probe: prefix shape mismatch");
  if (target.rows() != grid.steps() - t_index + 1 ||
      target.cols() != model.assets())
    throw std::invalid_argument("cfs_probe: target must cover [t_index, N]");
  if (!(eta_tube > 0.0))
    throw std::invalid_argument("cfs_probe: eta_tube must be positive");
  const Eigen::VectorXd state = prefix.row(t_index);
  if ((state.transpose() - target.row(0)).norm() >= eta_tube)
    throw std::invalid_argument(
        "cfs_probe: target incompatible with the prefix end");
  if (n_paths < 1) throw std::invalid_argument("cfs_probe: n_paths >= 1");

  std::vector<unsigned char> hit(n_paths, 0);
  parallel_for(n_paths, [&](long i) {
    const Eigen::MatrixXd cont = model.continue_path(
        grid, t_index, grid.steps(), state, rng.substream(i));
    bool ok = true;
    for (int r = 0; r < cont.rows() && ok; ++r)
      ok = (cont.row(r) - target.row(r)).norm() < eta_tube;
    hit[i] = ok ? 1 : 0;
  });
  long hits = 0;
  for (unsigned char b : hit) hits += b;
  CfsEstimate est;
  est.n_paths = n_paths;
  est.prob = wilson_interval(hits, n_paths);
  return est;
}

}  // namespace divmkt
