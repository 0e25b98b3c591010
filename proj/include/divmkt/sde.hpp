#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "divmkt/market_path.hpp"
#include "divmkt/region.hpp"
#include "divmkt/rng.hpp"
#include "divmkt/time_grid.hpp"

namespace divmkt {

/// Bounded volatility field sigma(t, S) of shape n x d with
/// eps_lo |xi|^2 <= |sigma' xi|^2 <= m_hi |xi|^2 for all xi.
/// Constant and diagonal providers are spot-checked against the bounds at
/// construction on 1000 random unit directions.
class VolatilitySpec {
 public:
  using Evaluator =
      std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)>;

  static VolatilitySpec constant(Eigen::MatrixXd sigma, double eps_lo, double m_hi);
  static VolatilitySpec diagonal(Eigen::VectorXd diag, double eps_lo, double m_hi);
  /// s * I_n shorthand.
  static VolatilitySpec scaled_identity(int n, double s);
  static VolatilitySpec callback(int assets, int drivers, Evaluator fn,
                                 double eps_lo, double m_hi);

  int assets() const noexcept { return assets_; }
  int drivers() const noexcept { return drivers_; }
  double eps_lo() const noexcept { return eps_lo_; }
  double m_hi() const noexcept { return m_hi_; }

  bool constant_form() const noexcept { return !fn_; }
  const Eigen::MatrixXd& matrix() const;  // constant form only

  Eigen::MatrixXd eval(double t, const Eigen::VectorXd& state) const;

 private:
  VolatilitySpec() = default;
  void spot_check_bounds() const;

  int assets_ = 0;
  int drivers_ = 0;
  double eps_lo_ = 0.0;
  double m_hi_ = 0.0;
  Eigen::MatrixXd const_matrix_;
  Evaluator fn_;
};

/// Drift field gamma(t, S) on the log scale, optionally clamped componentwise.
class DriftSpec {
 public:
  using Evaluator =
      std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

  static DriftSpec zero(int n);
  static DriftSpec constant(Eigen::VectorXd gamma);
  static DriftSpec callback(int n, Evaluator fn,
                            std::optional<double> clamp_bound = std::nullopt);

  int assets() const noexcept { return assets_; }
  bool zero_form() const noexcept { return zero_; }
  std::optional<double> clamp_bound() const noexcept { return clamp_; }

  Eigen::VectorXd eval(double t, const Eigen::VectorXd& state) const;

 private:
  DriftSpec() = default;
  int assets_ = 0;
  bool zero_ = false;
  Eigen::VectorXd const_gamma_;
  Evaluator fn_;
  std::optional<double> clamp_;
};

/// Parameters of the diverse-market drift with the log-pole singularity.
struct FernholzParams {
  Eigen::VectorXd g;  ///< baseline growth rates, all positive
  double delta = 0.0;
  double big_m = 0.0;  ///< M from the non-degeneracy upper bound

  int assets() const noexcept { return static_cast<int>(g.size()); }
  void validate() const;
};

/// gamma_i = g_i off the maximizer; the (tie-broken, lowest-index) largest
/// weight gets M / (delta * (log mu_max - log(1-delta))), which dives to
/// -infinity as mu_max approaches 1-delta.
/// Throws SingularDrift when mu_max >= 1-delta.
Eigen::VectorXd fernholz_drift(const FernholzParams& params,
                               const Eigen::Ref<const Eigen::VectorXd>& mu);

/// DriftSpec adapter: evaluates fernholz_drift on the market weights of the
/// current price state, with the singular term clamped at magnitude gamma_cap.
DriftSpec fernholz_drift_spec(const FernholzParams& params, double gamma_cap = 1e3);

/// Post-step rescue for singular-drift models: any state whose largest weight
/// reaches 1-delta-guard is pulled back onto that level by rescaling the
/// maximal coordinate. Events are counted, never hidden.
struct ReflectionGuard {
  DiversityRegion region;
  double guard = 1e-6;
};

struct SimulationStats {
  long reflections = 0;      ///< steps pulled back from mu_max >= 1-delta-guard
  long hard_violations = 0;  ///< steps that reached mu_max >= 1-delta before rescue
};

/// Explicit Euler on the log scale:
///   log S(t_{k+1}) = log S(t_k) + gamma(t_k, S(t_k)) dt + sigma(t_k, S(t_k)) dW_k.
/// Paths are strictly positive by construction. Throws SimulationDiverged on
/// non-finite states.
MarketPath simulate(const TimeGrid& grid, const Eigen::VectorXd& s0,
                    const DriftSpec& drift, const VolatilitySpec& vol,
                    RngStream rng,
                    const std::optional<ReflectionGuard>& reflection = std::nullopt,
                    SimulationStats* stats = nullptr);

/// Two-asset market S1 = exp(W1), S2 = exp(W1 + arctan(W2)) driven by a
/// 2-d Brownian motion; diverse with sup weight below 1/(1+exp(-pi/2)).
MarketPath arctan_market(const TimeGrid& grid, RngStream rng);

/// Largest market weight the arctan market can ever attain.
inline constexpr double kArctanWeightBound = 0.8278971013163362;

/// Appends c_prime * B_(t-T) + X_T on the log scale over (T, T+extra_T] using
/// an independent substream; extra_T must be a whole number of grid steps and
/// c_prime must lie within the volatility bounds [eps_lo, m_hi].
MarketPath extend_path(const MarketPath& path, double extra_T, double c_prime,
                       double eps_lo, double m_hi, RngStream rng);

namespace detail {

/// Shared Euler core: fills rows k0..k1 of `out` (row k0 = exp(x0)).
/// Used by simulate() and by model continuations starting mid-grid.
void euler_log_segment(const TimeGrid& grid, int k0, int k1,
                       const Eigen::VectorXd& log_s0, const DriftSpec& drift,
                       const VolatilitySpec& vol, RngStream& rng,
                       const std::optional<ReflectionGuard>& reflection,
                       SimulationStats* stats, Eigen::MatrixXd& out,
                       int out_row0);

}  // namespace detail

}  // namespace divmkt
