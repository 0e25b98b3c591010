#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "divmkt/bessel.hpp"
#include "divmkt/errors.hpp"
#include "divmkt/path_model.hpp"
#include "divmkt/stats.hpp"
#include "oracles.hpp"

using namespace divmkt;

TEST_CASE("radial decomposition: zero path and 1-d identities") {
  const TimeGrid g(1.0, 32);
  const VolatilitySpec vol = VolatilitySpec::scaled_identity(1, 1.0);

  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(33, 1);
  const auto rad0 = radial_decompose(zero, g, vol, 1.0, 1.0);
  CHECK(rad0.r.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rad0.beta_increments.cwiseAbs().maxCoeff() == 0.0);

  // d = 1: dN = sign(X) dX and <N> = <X> = t exactly.
  const Eigen::MatrixXd x = simulate_martingale(g, vol, RngStream(5));
  const auto rad = radial_decompose(x, g, vol, 1.0, 1.0);
  for (int k = 0; k < 32; ++k) {
    const double sign = x(k, 0) >= 0.0 ? 1.0 : -1.0;  // sign(0) -> +e1 convention
    const double expect = (x(k, 0) == 0.0 ? 1.0 : sign) * (x(k + 1, 0) - x(k, 0));
    CHECK(rad.beta_increments[k] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(rad.qvar_n[k + 1] == doctest::Approx(g.time(k + 1)).epsilon(1e-12));
    CHECK(rad.b[k] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("radial decomposition: d = 2 identity vol gives b = 2 and dt clock") {
  const TimeGrid g(1.0, 64);
  const VolatilitySpec vol = VolatilitySpec::scaled_identity(2, 1.0);
  const Eigen::MatrixXd x = simulate_martingale(g, vol, RngStream(6));
  const auto rad = radial_decompose(x, g, vol, 1.0, 1.0);
  for (int k = 0; k < 64; ++k) {
    CHECK(rad.b[k] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(rad.qvar_n[k + 1] - rad.qvar_n[k] == doctest::Approx(g.dt()).epsilon(1e-9));
  }
}

TEST_CASE("radial decomposition rejects out-of-bound volatility claims") {
  const TimeGrid g(1.0, 8);
  const VolatilitySpec vol = VolatilitySpec::scaled_identity(1, 1.0);
  const Eigen::MatrixXd x = simulate_martingale(g, vol, RngStream(7));
  CHECK_THROWS_AS(radial_decompose(x, g, vol, 2.0, 3.0), ModelContractViolation);
}

TEST_CASE("besq: absorbing zero and mean growth") {
  const TimeGrid g(1.0, 256);
  const Eigen::VectorXd frozen = besq_simulate(0.0, g, RngStream(1));
  CHECK(frozen.cwiseAbs().maxCoeff() == 0.0);

  const double dim = 2.0;
  const long n = 20000;
  std::vector<double> z_half(n), z_full(n);
  RngStream base(2);
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd z = besq_simulate(dim, g, base.substream(i));
    z_half[i] = z[128];
    z_full[i] = z[256];
    CHECK(z.minCoeff() >= 0.0);
  }
  const auto m_half = mean_with_se(z_half);
  const auto m_full = mean_with_se(z_full);
  CHECK(std::abs(m_half.mean - dim * 0.5) <= 3.0 * m_half.se);
  CHECK(std::abs(m_full.mean - dim * 1.0) <= 3.0 * m_full.se);
}

TEST_CASE("besq(1) terminal law matches the squared Gaussian (KS)") {
  const TimeGrid g(1.0, 1 << 12);
  const long n = 4000;
  std::vector<double> sample(n);
  RngStream base(3);
  for (long i = 0; i < n; ++i)
    sample[i] = besq_simulate(1.0, g, base.substream(i))[g.steps()];
  const double d = ks_statistic(
      sample, [](double z) { return z <= 0.0 ? 0.0 : std::erf(std::sqrt(z / 2.0)); });
  CHECK(ks_one_sample_pvalue(d, n) > 0.01);
}

TEST_CASE("coupled comparison: zero path and identical-equation coupling") {
  const TimeGrid g(1.0, 512);
  const VolatilitySpec vol1 = VolatilitySpec::scaled_identity(1, 1.0);

  BesqParams params;
  params.dimension = 1.0;
  params.c = 1.0;
  params.big_c = 1.0;
  params.drivers = 1;

  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(513, 1);
  const auto rep0 = coupled_comparison(zero, g, vol1, params, 1e-12);
  CHECK(rep0.frac_dominated == 1.0);
  CHECK(rep0.max_diff <= 0.0);

  // d = 1, sigma = 1, dimension 1: same SDE on the same beta; the coupled
  // scheme reproduces the square recursion, so only rounding noise remains.
  RngStream base(8);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Eigen::MatrixXd x = simulate_martingale(g, vol1, base.substream(i));
    const auto rep = coupled_comparison(x, g, vol1, params, 1e-6);
    worst = std::max(worst, rep.max_abs_diff);
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("besq params validate the dimension floor") {
  BesqParams params;
  params.dimension = 1.0;
  params.c = 1.0;
  params.big_c = 1.0;
  params.drivers = 2;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}

TEST_CASE("support probability: large eps saturates, oracle at d=1") {
  const VolatilitySpec vol = VolatilitySpec::scaled_identity(1, 1.0);
  const TimeGrid g(1.0, 1 << 12);
  const auto wide = support_probability(vol, g, 100.0, 500, 1.0, 1.0,
                                        RngStream(4));
  CHECK(wide.direct.p_hat == 1.0);

  const long n = 20000;
  const auto est = support_probability(vol, g, 1.0, n, 1.0, 1.0,
                                       RngStream(5));
  const double oracle = oracles::brownian_sup_probability(1.0, 1.0);
  const double se = std::sqrt(oracle * (1.0 - oracle) / n);
  // Discrete monitoring biases the estimate up by O(sqrt(dt)); allow for it.
  CHECK(std::abs(est.direct.p_hat - oracle) < 3.0 * se + 0.01);
  // The BESQ bound really is a lower bound.
  CHECK(est.besq_bound.p_hat <= est.direct.p_hat + 0.02);
  CHECK(est.besq_bound.p_hat > 0.0);
}

TEST_CASE("support probability nests across eps levels 0.5, 1.0, 2.0") {
  const VolatilitySpec vol = VolatilitySpec::scaled_identity(2, 1.0);
  const TimeGrid g(1.0, 1 << 10);
  const long n = 4000;
  const auto p_small = support_probability(vol, g, 0.5, n, 1.0, 1.0,
                                           RngStream(6), 500);
  const auto p_mid = support_probability(vol, g, 1.0, n, 1.0, 1.0,
                                         RngStream(6), 500);
  const auto p_big = support_probability(vol, g, 2.0, n, 1.0, 1.0,
                                         RngStream(6), 500);
  CHECK(p_small.direct.p_hat <= p_mid.direct.p_hat);
  CHECK(p_mid.direct.p_hat <= p_big.direct.p_hat);
  CHECK(p_mid.direct.p_hat > 0.0);
  // Interval nesting: each level's interval sits at or below the next one.
  CHECK(p_small.direct.lo <= p_mid.direct.hi);
  CHECK(p_mid.direct.lo <= p_big.direct.hi);
  CHECK(p_small.direct.hi <= p_big.direct.hi);
}

TEST_CASE("cfs probe: frozen target, wide tube, and ramp positivity") {
  // Short horizon so the 0.05-tube event has workable probability.
  const TimeGrid g(0.01, 256);
  FernholzParams fp;
  fp.g = Eigen::Vector3d(0.02, 0.02, 0.02);
  fp.delta = 0.3;
  fp.big_m = 1.0;
  FernholzModel model(fp, VolatilitySpec::scaled_identity(3, 0.2),
                      Eigen::Vector3d(1.0, 1.0, 1.0));
  const DiversityRegion region(0.3, 3);

  Eigen::MatrixXd prefix = model.initial_state().transpose();
  const int tail = g.steps();

  // Wide tube: certainty.
  Eigen::MatrixXd frozen(tail + 1, 3);
  for (int r = 0; r <= tail; ++r) frozen.row(r) = model.initial_state();
  const auto wide = cfs_probe(model, g, prefix, 0, frozen, 100.0, 400, RngStream(9));
  CHECK(wide.prob.p_hat == 1.0);

  // Linear ramp toward the boundary with a modest tube: positive estimate.
  const double reach = dist_to_complement(model.initial_state(), region);
  Eigen::MatrixXd ramp(tail + 1, 3);
  for (int r = 0; r <= tail; ++r) {
    ramp.row(r) = model.initial_state();
    ramp(r, 0) += 0.04 * reach * r / tail;
  }
  const auto est = cfs_probe(model, g, prefix, 0, ramp, 0.05, 3000, RngStream(10));
  CHECK(est.prob.lo > 0.0);

  // Incompatible target rejected.
  Eigen::MatrixXd off = ramp;
  off.row(0).array() += 10.0;
  CHECK_THROWS_AS(cfs_probe(model, g, prefix, 0, off, 0.05, 10, RngStream(11)),
                  std::invalid_argument);
}

TEST_CASE("small-ball positivity in two dimensions (eps = 0.5)") {
  const VolatilitySpec vol = VolatilitySpec::scaled_identity(2, 1.0);
  const TimeGrid g(1.0, 1 << 10);
  const auto est = support_probability(vol, g, 0.5, 100000, 1.0, 1.0,
                                       RngStream(12), 2000);
  CHECK(est.direct.lo > 0.0);        // the CI excludes zero
  CHECK(est.direct.p_hat < 1e-3);    // but the event is genuinely rare
}
