#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "divmkt/conditioned.hpp"
#include "divmkt/diversity.hpp"
#include "divmkt/errors.hpp"
#include "divmkt/stats.hpp"
#include "oracles.hpp"

using namespace divmkt;

namespace {

ConditionedSampler make_sampler(int n, double sigma, double delta) {
  return ConditionedSampler{VolatilitySpec::scaled_identity(n, sigma),
                            DiversityRegion(delta, n)};
}

}  // namespace

TEST_CASE("sample_conditioned: deterministic pre-model accepts immediately") {
  ConditionedSampler s{
      VolatilitySpec::callback(
          2, 2,
          [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(2, 2); },
          0.0, 1.0),
      DiversityRegion(0.2, 2)};
  const TimeGrid g(1.0, 32);
  const auto draw = sample_conditioned(s, g, Eigen::Vector2d(1.0, 1.0), RngStream(1));
  CHECK(draw.attempts == 1);
  for (int k = 0; k <= 32; ++k) {
    CHECK(draw.path.values()(k, 0) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("sample_conditioned: bad start point is rejected") {
  const auto s = make_sampler(2, 0.2, 0.2);
  Eigen::Vector2d outside(9.0, 1.0);
  CHECK_THROWS_AS(sample_conditioned(s, TimeGrid(1.0, 8), outside, RngStream(1)),
                  std::invalid_argument);
}

TEST_CASE("acceptance rate: certainty and impossibility endpoints") {
  const TimeGrid g(1.0, 16);
  ConditionedSampler frozen{
      VolatilitySpec::callback(
          2, 2,
          [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(2, 2); },
          0.0, 1.0),
      DiversityRegion(0.2, 2)};
  const auto full = acceptance_rate(frozen, g, Eigen::Vector2d(1.0, 1.0), 200,
                                    RngStream(2));
  CHECK(full.p_hat == 1.0);

  // Empty region: nothing can stay inside, so the rate is exactly zero.
  ConditionedSampler impossible = make_sampler(2, 0.2, 0.5);
  CHECK(impossible.region.empty());
  const auto rate = acceptance_rate(impossible, g, Eigen::Vector2d(1.0, 1.0), 50,
                                    RngStream(2));
  CHECK(rate.p_hat == 0.0);
}

TEST_CASE("acceptance rate matches the reflection-series oracle") {
  // n = 2: the log ratio is a driftless BM with vol sigma*sqrt(2) and the
  // stay event is a two-sided barrier at log((1-delta)/delta).
  const double sigma = 0.6, delta = 0.35;
  const auto s = make_sampler(2, sigma, delta);
  const TimeGrid g(1.0, 1 << 14);
  const auto rate = acceptance_rate(s, g, Eigen::Vector2d(1.0, 1.0), 4000,
                                    RngStream(1234));
  const double barrier = std::log((1.0 - delta) / delta);
  const double oracle =
      oracles::brownian_sup_probability(barrier / (sigma * std::sqrt(2.0)), 1.0);
  CHECK(oracle == doctest::Approx(0.12538132987787562).epsilon(1e-12));
  const double se = std::sqrt(oracle * (1.0 - oracle) / 4000);
  CHECK(std::abs(rate.p_hat - oracle) < 3.0 * se + 0.004);
}

TEST_CASE("acceptance rate: spec-pinned regression at delta=0.2 sigma=0.2") {
  const auto s = make_sampler(2, 0.2, 0.2);
  const TimeGrid g(1.0, 1 << 10);
  const auto rate = acceptance_rate(s, g, Eigen::Vector2d(1.0, 1.0), 10000,
                                    RngStream(77));
  // Conditioning barely binds here: the barrier sits ~4.9 sigma out, so the
  // pinned estimate saturates at 1 with a sub-0.04% Wilson margin.
  CHECK(rate.p_hat == 1.0);
  CHECK(rate.lo == doctest::Approx(0.9996160016293234).epsilon(1e-12));
  CHECK(rate.hi == 1.0);
}

TEST_CASE("acceptance rate is monotone in horizon and vol, up to CI overlap") {
  const Eigen::Vector2d s0(1.0, 1.0);
  const auto overlap_ok = [](const WilsonInterval& wide, const WilsonInterval& tight) {
    // wide should not be significantly smaller than tight
    return wide.hi >= tight.lo;
  };
  const long n = 3000;
  const auto r_t1 = acceptance_rate(make_sampler(2, 0.5, 0.35), TimeGrid(0.5, 1 << 12),
                                    s0, n, RngStream(10));
  const auto r_t2 = acceptance_rate(make_sampler(2, 0.5, 0.35), TimeGrid(1.0, 1 << 13),
                                    s0, n, RngStream(10));
  const auto r_t3 = acceptance_rate(make_sampler(2, 0.5, 0.35), TimeGrid(2.0, 1 << 14),
                                    s0, n, RngStream(10));
  CHECK(r_t1.p_hat >= r_t2.p_hat - 0.02);
  CHECK(r_t2.p_hat >= r_t3.p_hat - 0.02);
  CHECK(overlap_ok(r_t1, r_t2));
  CHECK(overlap_ok(r_t2, r_t3));

  const auto r_s1 = acceptance_rate(make_sampler(2, 0.3, 0.35), TimeGrid(1.0, 1 << 13),
                                    s0, n, RngStream(11));
  const auto r_s2 = acceptance_rate(make_sampler(2, 0.6, 0.35), TimeGrid(1.0, 1 << 13),
                                    s0, n, RngStream(11));
  const auto r_s3 = acceptance_rate(make_sampler(2, 0.9, 0.35), TimeGrid(1.0, 1 << 13),
                                    s0, n, RngStream(11));
  CHECK(r_s1.p_hat >= r_s2.p_hat - 0.02);
  CHECK(r_s2.p_hat >= r_s3.p_hat - 0.02);
}

TEST_CASE("conditioned draws match the independent filter oracle (KS)") {
  const double sigma = 0.5, delta = 0.3;
  const auto s = make_sampler(2, sigma, delta);
  const TimeGrid g(1.0, 1 << 9);
  const Eigen::Vector2d s0(1.0, 1.0);
  const long n = 3000;

  std::vector<double> lib(n), oracle(n);
  RngStream lib_rng(901);
  for (long i = 0; i < n; ++i) {
    const auto draw = sample_conditioned(s, g, s0, lib_rng.substream(i));
    lib[i] = max_weight(draw.path.values().row(g.steps()).transpose());
  }
  const Eigen::MatrixXd weights = oracles::filter_sampler_terminal_weights(
      2, sigma, delta, g, s0, n, RngStream(902));
  for (long i = 0; i < n; ++i) oracle[i] = weights.row(i).maxCoeff();

  const double d = ks_statistic(lib, oracle);
  CHECK(ks_two_sample_pvalue(d, n, n) > 0.01);
}

TEST_CASE("conditioned law matches itself on three scalar functionals (KS)") {
  // Two independent batches of conditioned draws, compared on the terminal
  // max weight, the terminal log price, and the time-averaged max weight.
  const auto s = make_sampler(2, 0.5, 0.3);
  const TimeGrid g(1.0, 1 << 8);
  const Eigen::Vector2d s0(1.0, 1.0);
  const long n = 2500;

  std::vector<double> mu_a(n), mu_b(n), logs_a(n), logs_b(n), avg_a(n), avg_b(n);
  const auto fill = [&](std::uint64_t seed, std::vector<double>& mu,
                        std::vector<double>& logs, std::vector<double>& avg) {
    RngStream rng(seed);
    for (long i = 0; i < n; ++i) {
      const auto draw = sample_conditioned(s, g, s0, rng.substream(i));
      const auto w = market_weights(draw.path).max_weights();
      mu[i] = w[g.steps()];
      logs[i] = std::log(draw.path.values()(g.steps(), 0));
      avg[i] = w.sum() / w.size();
    }
  };
  fill(911, mu_a, logs_a, avg_a);
  fill(912, mu_b, logs_b, avg_b);
  CHECK(ks_two_sample_pvalue(ks_statistic(mu_a, mu_b), n, n) > 0.01);
  CHECK(ks_two_sample_pvalue(ks_statistic(logs_a, logs_b), n, n) > 0.01);
  CHECK(ks_two_sample_pvalue(ks_statistic(avg_a, avg_b), n, n) > 0.01);
}

TEST_CASE("bayes ratio check: trivial reductions and self-consistency") {
  const auto s = make_sampler(2, 0.45, 0.3);
  const TimeGrid g(1.0, 1 << 8);
  const Eigen::Vector2d s0(1.0, 1.0);

  const auto ref = sample_conditioned(s, g, s0, RngStream(41)).path;

  // Huge tube: both estimators are exactly 1.
  const auto wide = bayes_ratio_check(s, g, s0, 0, ref, 1e9, 2000, RngStream(42));
  CHECK(wide.conclusive);
  CHECK(wide.conditioned_estimate.p_hat == 1.0);
  CHECK(wide.premodel_ratio == 1.0);

  // t = 0 and a moderate tube: unconditional self-consistency.
  const auto at0 = bayes_ratio_check(s, g, s0, 0, ref, 0.6, 20000, RngStream(43));
  CHECK(at0.conclusive);
  CHECK(at0.matched_conditioned == 20000);  // prefix matching keeps everything
  CHECK(std::abs(at0.z_score) < 3.0);

  // Mid-horizon conditioning.
  const auto mid = bayes_ratio_check(s, g, s0, 1 << 7, ref, 0.6, 20000, RngStream(44));
  CHECK(mid.conclusive);
  CHECK(std::abs(mid.z_score) < 3.0);
}

TEST_CASE("bayes ratio check: spec-parameter run and inconclusive path") {
  const auto s = make_sampler(2, 0.2, 0.2);
  const TimeGrid g(1.0, 1 << 8);
  const Eigen::Vector2d s0(1.0, 1.0);
  const auto ref = sample_conditioned(s, g, s0, RngStream(51)).path;
  const auto rep = bayes_ratio_check(s, g, s0, 0, ref, 0.3, 20000, RngStream(52));
  CHECK(rep.conclusive);
  CHECK(std::abs(rep.z_score) < 3.0);

  // Too few paths to form matched bundles: a report, not an error.
  const auto thin = bayes_ratio_check(s, g, s0, 128, ref, 0.3, 16, RngStream(53));
  CHECK(!thin.conclusive);
}
