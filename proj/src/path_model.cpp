#include "divmkt/path_model.hpp"

#include <cmath>
#include <stdexcept>

#include "divmkt/errors.hpp"

namespace divmkt {

MarketPath PathModel::sample_path(const TimeGrid& grid, RngStream rng) const {
  return MarketPath(grid,
                    continue_path(grid, 0, grid.steps(), initial_state(), rng));
}

// ---------------------------------------------------------------------------
// ArctanModel
// ---------------------------------------------------------------------------

Eigen::MatrixXd ArctanModel::continue_path(const TimeGrid& grid, int k0, int k1,
                                           const Eigen::VectorXd& state,
                                           RngStream rng) const {
  if (k0 < 0 || k1 > grid.steps() || k1 < k0)
    throw std::invalid_argument("ArctanModel: bad index range");
  if (state.size() != 2 || !(state.minCoeff() > 0.0))
    throw std::invalid_argument("ArctanModel: bad state");
  const double gap = std::log(state[1]) - std::log(state[0]);
  if (!(std::abs(gap) < M_PI / 2))
    throw std::invalid_argument("ArctanModel: state outside the arctan range");
  double w1 = std::log(state[0]);
  double w2 = std::tan(gap);
  const double sdt = std::sqrt(grid.dt());
  Eigen::MatrixXd out(k1 - k0 + 1, 2);
  out.row(0) = state;
  for (int k = k0; k < k1; ++k) {
    w1 += sdt * rng.normal();
    w2 += sdt * rng.normal();
    out(k - k0 + 1, 0) = std::exp(w1);
    out(k - k0 + 1, 1) = std::exp(w1 + std::atan(w2));
  }
  return out;
}

// ---------------------------------------------------------------------------
// FernholzModel
// ---------------------------------------------------------------------------

FernholzModel::FernholzModel(FernholzParams params, VolatilitySpec vol,
                             Eigen::VectorXd s0, double gamma_cap, double guard)
    : params_(std::move(params)),
      vol_(std::move(vol)),
      s0_(std::move(s0)),
      drift_(fernholz_drift_spec(params_, gamma_cap)),
      reflection_{DiversityRegion(params_.delta, params_.assets()), guard} {
  params_.validate();
  if (vol_.assets() != params_.assets())
    throw std::invalid_argument("FernholzModel: vol dimension mismatch");
  if (s0_.size() != params_.assets() || !(s0_.minCoeff() > 0.0))
    throw std::invalid_argument("FernholzModel: bad s0");
  if (!reflection_.region.contains(s0_))
    throw std::invalid_argument("FernholzModel: s0 outside O(delta)");
}

Eigen::MatrixXd FernholzModel::continue_path(const TimeGrid& grid, int k0, int k1,
                                             const Eigen::VectorXd& state,
                                             RngStream rng) const {
  if (k0 < 0 || k1 > grid.steps() || k1 < k0)
    throw std::invalid_argument("FernholzModel: bad index range");
  Eigen::MatrixXd out(k1 - k0 + 1, assets());
  detail::euler_log_segment(grid, k0, k1, state.array().log(), drift_, vol_,
                            rng, reflection_, nullptr, out, 0);
  return out;
}

// ---------------------------------------------------------------------------
// PreModel / ConditionedModel
// ---------------------------------------------------------------------------

DriftSpec premodel_drift(const VolatilitySpec& vol) {
  if (vol.constant_form()) {
    const Eigen::MatrixXd& s = vol.matrix();
    Eigen::VectorXd gamma = -0.5 * s.rowwise().squaredNorm();
    return DriftSpec::constant(std::move(gamma));
  }
  VolatilitySpec v = vol;
  return DriftSpec::callback(vol.assets(),
                             [v](double t, const Eigen::VectorXd& state) {
                               const Eigen::MatrixXd s = v.eval(t, state);
                               return Eigen::VectorXd(-0.5 * s.rowwise().squaredNorm());
                             });
}

PreModel::PreModel(VolatilitySpec vol, Eigen::VectorXd s0)
    : vol_(std::move(vol)), s0_(std::move(s0)), drift_(premodel_drift(vol_)) {
  if (s0_.size() != vol_.assets() || !(s0_.minCoeff() > 0.0))
    throw std::invalid_argument("PreModel: bad s0");
}

Eigen::MatrixXd PreModel::continue_path(const TimeGrid& grid, int k0, int k1,
                                        const Eigen::VectorXd& state,
                                        RngStream rng) const {
  if (k0 < 0 || k1 > grid.steps() || k1 < k0)
    throw std::invalid_argument("PreModel: bad index range");
  Eigen::MatrixXd out(k1 - k0 + 1, assets());
  detail::euler_log_segment(grid, k0, k1, state.array().log(), drift_, vol_,
                            rng, std::nullopt, nullptr, out, 0);
  return out;
}

ConditionedModel::ConditionedModel(VolatilitySpec vol, DiversityRegion region,
                                   Eigen::VectorXd s0, int max_attempts)
    : pre_(std::move(vol), std::move(s0)),
      region_(region),
      max_attempts_(max_attempts) {
  if (max_attempts_ < 1)
    throw std::invalid_argument("ConditionedModel: max_attempts >= 1");
  if (!region_.contains(pre_.initial_state()))
    throw std::invalid_argument("ConditionedModel: s0 outside O(delta)");
}

Eigen::MatrixXd ConditionedModel::continue_path(const TimeGrid& grid, int k0,
                                                int k1, const Eigen::VectorXd& state,
                                                RngStream rng) const {
  if (!region_.contains(state))
    throw std::invalid_argument("ConditionedModel: state outside O(delta)");
  // Conditioning couples to the whole remaining horizon, so the rejection
  // always runs to the final grid index and the requested slice is returned.
  for (int attempt = 0; attempt < max_attempts_; ++attempt) {
    Eigen::MatrixXd full =
        pre_.continue_path(grid, k0, grid.steps(), state, rng.substream(attempt));
    bool inside = true;
    for (int r = 0; r < full.rows() && inside; ++r)
      inside = region_.contains(Eigen::VectorXd(full.row(r)));
    if (inside) return full.topRows(k1 - k0 + 1);
  }
  throw AcceptanceTooRare("ConditionedModel: no accepted continuation", 0.0,
                          max_attempts_);
}

}  // namespace divmkt
