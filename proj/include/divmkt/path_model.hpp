#pragma once

#include <Eigen/Dense>
#include <memory>

#include "divmkt/market_path.hpp"
#include "divmkt/region.hpp"
#include "divmkt/rng.hpp"
#include "divmkt/sde.hpp"
#include "divmkt/time_grid.hpp"

namespace divmkt {

/// A market model that can be restarted from any reached state, which is what
/// scenario-tree construction and conditional-support probes need.
class PathModel {
 public:
  virtual ~PathModel() = default;

  virtual int assets() const = 0;
  virtual Eigen::VectorXd initial_state() const = 0;

  /// Simulates rows k0..k1 inclusive; row 0 of the result equals `state`.
  virtual Eigen::MatrixXd continue_path(const TimeGrid& grid, int k0, int k1,
                                        const Eigen::VectorXd& state,
                                        RngStream rng) const = 0;

  /// Block size hint for callers that scan incrementally. Models whose
  /// continuation law couples to the whole remaining horizon return the
  /// full horizon instead.
  virtual int preferred_block() const { return 128; }

  MarketPath sample_path(const TimeGrid& grid, RngStream rng) const;
};

/// S1 = exp(W1), S2 = exp(W1 + arctan(W2)); the driving pair (W1, W2) is
/// recovered exactly from any price state, so continuations are exact.
class ArctanModel final : public PathModel {
 public:
  int assets() const override { return 2; }
  Eigen::VectorXd initial_state() const override {
    return Eigen::VectorXd::Ones(2);
  }
  Eigen::MatrixXd continue_path(const TimeGrid& grid, int k0, int k1,
                                const Eigen::VectorXd& state,
                                RngStream rng) const override;
};

/// Euler model with the singular diverse drift and reflection guard.
class FernholzModel final : public PathModel {
 public:
  FernholzModel(FernholzParams params, VolatilitySpec vol, Eigen::VectorXd s0,
                double gamma_cap = 1e3, double guard = 1e-6);

  int assets() const override { return params_.assets(); }
  Eigen::VectorXd initial_state() const override { return s0_; }
  Eigen::MatrixXd continue_path(const TimeGrid& grid, int k0, int k1,
                                const Eigen::VectorXd& state,
                                RngStream rng) const override;

  const FernholzParams& params() const { return params_; }
  const VolatilitySpec& vol() const { return vol_; }

 private:
  FernholzParams params_;
  VolatilitySpec vol_;
  Eigen::VectorXd s0_;
  DriftSpec drift_;
  ReflectionGuard reflection_;
};

/// Driftless exponential local martingale (the conditioning pre-model):
/// d log S_i = -a_ii/2 dt + (sigma dW)_i.
class PreModel final : public PathModel {
 public:
  PreModel(VolatilitySpec vol, Eigen::VectorXd s0);

  int assets() const override { return vol_.assets(); }
  Eigen::VectorXd initial_state() const override { return s0_; }
  Eigen::MatrixXd continue_path(const TimeGrid& grid, int k0, int k1,
                                const Eigen::VectorXd& state,
                                RngStream rng) const override;

  const VolatilitySpec& vol() const { return vol_; }
  const DriftSpec& drift() const { return drift_; }

 private:
  VolatilitySpec vol_;
  Eigen::VectorXd s0_;
  DriftSpec drift_;
};

/// The pre-model drift making prices driftless stochastic exponentials.
DriftSpec premodel_drift(const VolatilitySpec& vol);

/// Pre-model conditioned on staying in O(delta) at every remaining grid
/// point; continuations are drawn by rejection, so they are exact draws from
/// the discretized conditional law.
class ConditionedModel final : public PathModel {
 public:
  ConditionedModel(VolatilitySpec vol, DiversityRegion region,
                   Eigen::VectorXd s0, int max_attempts = 100000);

  int assets() const override { return pre_.assets(); }
  Eigen::VectorXd initial_state() const override { return pre_.initial_state(); }
  Eigen::MatrixXd continue_path(const TimeGrid& grid, int k0, int k1,
                                const Eigen::VectorXd& state,
                                RngStream rng) const override;
  int preferred_block() const override { return 1 << 30; }

  const DiversityRegion& region() const { return region_; }

 private:
  PreModel pre_;
  DiversityRegion region_;
  int max_attempts_;
};

}  // namespace divmkt
