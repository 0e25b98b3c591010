#include "divmkt/sde.hpp"

#include <cmath>
#include <stdexcept>

#include "divmkt/errors.hpp"

namespace divmkt {

// ---------------------------------------------------------------------------
// VolatilitySpec
// ---------------------------------------------------------------------------

VolatilitySpec VolatilitySpec::constant(Eigen::MatrixXd sigma, double eps_lo,
                                        double m_hi) {
  VolatilitySpec v;
  v.assets_ = static_cast<int>(sigma.rows());
  v.drivers_ = static_cast<int>(sigma.cols());
  v.eps_lo_ = eps_lo;
  v.m_hi_ = m_hi;
  v.const_matrix_ = std::move(sigma);
  if (v.assets_ < 1 || v.drivers_ < 1)
    throw std::invalid_argument("VolatilitySpec: empty matrix");
  if (!(eps_lo > 0.0) || !(m_hi >= eps_lo))
    throw std::invalid_argument("VolatilitySpec: need 0 < eps_lo <= m_hi");
  v.spot_check_bounds();
  return v;
}

VolatilitySpec VolatilitySpec::diagonal(Eigen::VectorXd diag, double eps_lo,
                                        double m_hi) {
  Eigen::MatrixXd m = diag.asDiagonal();
  return constant(std::move(m), eps_lo, m_hi);
}

VolatilitySpec VolatilitySpec::scaled_identity(int n, double s) {
  return diagonal(Eigen::VectorXd::Constant(n, s), s * s, s * s);
}

VolatilitySpec VolatilitySpec::callback(int assets, int drivers, Evaluator fn,
                                        double eps_lo, double m_hi) {
  VolatilitySpec v;
  v.assets_ = assets;
  v.drivers_ = drivers;
  v.eps_lo_ = eps_lo;
  v.m_hi_ = m_hi;
  v.fn_ = std::move(fn);
  if (assets < 1 || drivers < 1)
    throw std::invalid_argument("VolatilitySpec: bad dimensions");
  if (!(eps_lo >= 0.0) || !(m_hi >= eps_lo))
    throw std::invalid_argument("VolatilitySpec: need 0 <= eps_lo <= m_hi");
  if (!v.fn_) throw std::invalid_argument("VolatilitySpec: null evaluator");
  return v;
}

const Eigen::MatrixXd& VolatilitySpec::matrix() const {
  if (!constant_form())
    throw std::logic_error("VolatilitySpec: not in constant form");
  return const_matrix_;
}

Eigen::MatrixXd VolatilitySpec::eval(double t, const Eigen::VectorXd& state) const {
  if (constant_form()) return const_matrix_;
  Eigen::MatrixXd s = fn_(t, state);
  if (s.rows() != assets_ || s.cols() != drivers_)
    throw ModelContractViolation("VolatilitySpec: evaluator shape mismatch");
  return s;
}

void VolatilitySpec::spot_check_bounds() const {
  RngStream rng(0x51D0CAFEULL, 0);  // fixed internal stream, no user draws spent
  Eigen::VectorXd xi(assets_);
  for (int trial = 0; trial < 1000; ++trial) {
    for (int i = 0; i < assets_; ++i) xi[i] = rng.normal();
    const double len = xi.norm();
    if (len < 1e-12) continue;
    xi /= len;
    const double q = (const_matrix_.transpose() * xi).squaredNorm();
    if (q < eps_lo_ * (1.0 - 1e-9) - 1e-15 || q > m_hi_ * (1.0 + 1e-9) + 1e-15)
      throw std::invalid_argument(
          "VolatilitySpec: bounds violated on a random unit direction");
  }
}

// ---------------------------------------------------------------------------
// DriftSpec
// ---------------------------------------------------------------------------

DriftSpec DriftSpec::zero(int n) {
  DriftSpec d;
  d.assets_ = n;
  d.zero_ = true;
  d.const_gamma_ = Eigen::VectorXd::Zero(n);
  return d;
}

DriftSpec DriftSpec::constant(Eigen::VectorXd gamma) {
  DriftSpec d;
  d.assets_ = static_cast<int>(gamma.size());
  d.const_gamma_ = std::move(gamma);
  return d;
}

DriftSpec DriftSpec::callback(int n, Evaluator fn, std::optional<double> clamp_bound) {
  DriftSpec d;
  d.assets_ = n;
  d.fn_ = std::move(fn);
  d.clamp_ = clamp_bound;
  if (!d.fn_) throw std::invalid_argument("DriftSpec: null evaluator");
  if (clamp_bound && !(*clamp_bound > 0.0))
    throw std::invalid_argument("DriftSpec: clamp bound must be positive");
  return d;
}

Eigen::VectorXd DriftSpec::eval(double t, const Eigen::VectorXd& state) const {
  if (!fn_) return const_gamma_;
  Eigen::VectorXd g = fn_(t, state);
  if (g.size() != assets_)
    throw ModelContractViolation("DriftSpec: evaluator size mismatch");
  if (clamp_) {
    const double b = *clamp_;
    g = g.cwiseMax(-b).cwiseMin(b);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Fernholz drift
// ---------------------------------------------------------------------------

void FernholzParams::validate() const {
  if (g.size() < 1) throw std::invalid_argument("FernholzParams: empty g");
  if (!(g.minCoeff() > 0.0))
    throw std::invalid_argument("FernholzParams: g must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("FernholzParams: delta must be in (0,1)");
  if (!(1.0 - delta > 1.0 / assets()))
    throw std::invalid_argument("FernholzParams: O(delta) is empty, need 1-delta > 1/n");
  if (!(big_m > 0.0))
    throw std::invalid_argument("FernholzParams: M must be positive");
}

Eigen::VectorXd fernholz_drift(const FernholzParams& params,
                               const Eigen::Ref<const Eigen::VectorXd>& mu) {
  params.validate();
  if (mu.size() != params.assets())
    throw std::invalid_argument("fernholz_drift: dimension mismatch");
  const double mu_max = mu.maxCoeff();
  const double thresh = 1.0 - params.delta;
  if (!(mu.minCoeff() > 0.0))
    throw std::domain_error("fernholz_drift: weights must be positive");
  if (mu_max >= thresh)
    throw SingularDrift("fernholz_drift: largest weight at or past 1-delta");
  Eigen::VectorXd gamma = params.g;
  const int leader = max_weight_index(mu);
  gamma[leader] =
      params.big_m / (params.delta * (std::log(mu_max) - std::log(thresh)));
  return gamma;
}

DriftSpec fernholz_drift_spec(const FernholzParams& params, double gamma_cap) {
  params.validate();
  if (!(gamma_cap > 0.0))
    throw std::invalid_argument("fernholz_drift_spec: gamma_cap must be positive");
  const FernholzParams p = params;
  return DriftSpec::callback(
      params.assets(),
      [p, gamma_cap](double, const Eigen::VectorXd& prices) {
        Eigen::VectorXd gamma = p.g;
        const double total = prices.sum();
        const int leader = max_weight_index(prices);
        const double mu_max = prices[leader] / total;
        const double thresh = 1.0 - p.delta;
        // Inside O the pole term is finite and negative; at or past the
        // boundary (possible only transiently before the reflection guard
        // acts) it saturates at the cap.
        double pole = -gamma_cap;
        if (mu_max < thresh) {
          pole = p.big_m / (p.delta * (std::log(mu_max) - std::log(thresh)));
          pole = std::max(pole, -gamma_cap);
        }
        gamma[leader] = pole;
        return gamma;
      });
}

// ---------------------------------------------------------------------------
// Euler core
// ---------------------------------------------------------------------------

namespace detail {

namespace {

// Rescales the largest coordinate (in log space) so its weight drops to
// 1-delta-guard. Loops in case another coordinate then violates; with
// thresholds >= 1/2 one pass always suffices.
void reflect_into_region(Eigen::VectorXd& x_log, Eigen::VectorXd& prices,
                         const ReflectionGuard& guard, SimulationStats* stats) {
  const double target = 1.0 - guard.region.delta() - guard.guard;
  for (int pass = 0; pass <= prices.size(); ++pass) {
    const int leader = max_weight_index(prices);
    const double total = prices.sum();
    const double w = prices[leader] / total;
    if (w < target) return;
    if (stats) {
      ++stats->reflections;
      if (w >= 1.0 - guard.region.delta()) ++stats->hard_violations;
    }
    const double rest = total - prices[leader];
    const double fixed = target / (1.0 - target) * rest;
    prices[leader] = fixed;
    x_log[leader] = std::log(fixed);
  }
}

}  // namespace

void euler_log_segment(const TimeGrid& grid, int k0, int k1,
                       const Eigen::VectorXd& log_s0, const DriftSpec& drift,
                       const VolatilitySpec& vol, RngStream& rng,
                       const std::optional<ReflectionGuard>& reflection,
                       SimulationStats* stats, Eigen::MatrixXd& out,
                       int out_row0) {
  const int n = vol.assets();
  const int d = vol.drivers();
  if (drift.assets() != n)
    throw std::invalid_argument("euler_log_segment: drift/vol dimension mismatch");
  const double dt = grid.dt();
  const double sdt = std::sqrt(dt);

  Eigen::VectorXd x = log_s0;
  Eigen::VectorXd prices = x.array().exp();
  out.row(out_row0) = prices;

  const bool const_vol = vol.constant_form();
  const Eigen::MatrixXd* sigma_const = const_vol ? &vol.matrix() : nullptr;
  Eigen::VectorXd z(d);

  for (int k = k0; k < k1; ++k) {
    const double t = grid.time(k);
    for (int j = 0; j < d; ++j) z[j] = rng.normal();
    // Both coefficients are read at the left endpoint state.
    if (!drift.zero_form()) x += drift.eval(t, prices) * dt;
    if (const_vol) {
      x.noalias() += (*sigma_const) * (sdt * z);
    } else {
      x.noalias() += vol.eval(t, prices) * (sdt * z);
    }
    if (!x.allFinite())
      throw SimulationDiverged("euler_log_segment: non-finite state", k + 1);
    // Log prices beyond +-700 would under/overflow the price scale.
    if (x.cwiseAbs().maxCoeff() > 700.0)
      throw SimulationDiverged("euler_log_segment: price scale exhausted", k + 1);
    prices = x.array().exp();
    if (reflection) reflect_into_region(x, prices, *reflection, stats);
    out.row(out_row0 + (k + 1 - k0)) = prices;
  }
}

}  // namespace detail

MarketPath simulate(const TimeGrid& grid, const Eigen::VectorXd& s0,
                    const DriftSpec& drift, const VolatilitySpec& vol,
                    RngStream rng, const std::optional<ReflectionGuard>& reflection,
                    SimulationStats* stats) {
  if (s0.size() != vol.assets())
    throw std::invalid_argument("simulate: s0 dimension mismatch");
  if (!(s0.minCoeff() > 0.0))
    throw std::invalid_argument("simulate: s0 must be strictly positive");
  Eigen::MatrixXd out(grid.points(), vol.assets());
  detail::euler_log_segment(grid, 0, grid.steps(), s0.array().log(), drift, vol,
                            rng, reflection, stats, out, 0);
  return MarketPath(grid, std::move(out));
}

MarketPath arctan_market(const TimeGrid& grid, RngStream rng) {
  const double sdt = std::sqrt(grid.dt());
  Eigen::MatrixXd out(grid.points(), 2);
  double w1 = 0.0, w2 = 0.0;
  out(0, 0) = 1.0;
  out(0, 1) = 1.0;
  for (int k = 1; k <= grid.steps(); ++k) {
    w1 += sdt * rng.normal();
    w2 += sdt * rng.normal();
    out(k, 0) = std::exp(w1);
    out(k, 1) = std::exp(w1 + std::atan(w2));
  }
  return MarketPath(grid, std::move(out));
}

MarketPath extend_path(const MarketPath& path, double extra_T, double c_prime,
                       double eps_lo, double m_hi, RngStream rng) {
  if (extra_T < 0.0)
    throw std::invalid_argument("extend_path: extra_T must be nonnegative");
  if (!(c_prime >= eps_lo && c_prime <= m_hi))
    throw std::invalid_argument("extend_path: c_prime outside [eps_lo, m_hi]");
  if (extra_T == 0.0) return path;
  const TimeGrid& g = path.grid();
  const double dt = g.dt();
  const long extra_steps = std::lround(extra_T / dt);
  if (extra_steps < 1 || std::abs(extra_steps * dt - extra_T) > 1e-9 * g.horizon())
    throw std::invalid_argument(
        "extend_path: extra_T must be a whole number of grid steps");

  TimeGrid extended(g.horizon() + extra_steps * dt,
                    g.steps() + static_cast<int>(extra_steps));
  const int n = path.assets();
  const double sdt = std::sqrt(dt);

  // Original rows are copied verbatim so the junction is bit-exact.
  Eigen::MatrixXd values(extended.points(), n);
  values.topRows(g.points()) = path.values();
  RngStream sub = rng.substream(0x45585445ULL);  // independent of prior draws
  Eigen::VectorXd x = path.values().row(g.steps()).array().log();
  for (long j = 1; j <= extra_steps; ++j) {
    for (int i = 0; i < n; ++i) x[i] += c_prime * sdt * sub.normal();
    values.row(g.steps() + j) = x.array().exp();
  }
  return MarketPath(extended, std::move(values));
}

}  // namespace divmkt
