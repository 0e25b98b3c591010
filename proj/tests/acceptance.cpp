// Acceptance suite: one self-contained check per criterion, each printing a
// single PASS/FAIL line with the measured numbers.

#include <Eigen/Dense>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "divmkt/bessel.hpp"
#include "divmkt/certificate.hpp"
#include "divmkt/conditioned.hpp"
#include "divmkt/cps.hpp"
#include "divmkt/diversity.hpp"
#include "divmkt/hull.hpp"
#include "divmkt/parallel.hpp"
#include "divmkt/path_model.hpp"
#include "divmkt/stats.hpp"
#include "divmkt/tilt.hpp"
#include "divmkt/tree.hpp"
#include "oracles.hpp"

using namespace divmkt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// ---------------------------------------------------------------------------
// 1. Tube property over three models
// ---------------------------------------------------------------------------

struct TubeEnsembleResult {
  double worst_slack = -1e300;
  long paths = 0;
  long violations = 0;
};

TubeEnsembleResult tube_ensemble(
    const std::function<MarketPath(RngStream)>& sample, const DiversityRegion& region,
    double eta, long n_paths, std::uint64_t seed) {
  std::vector<double> slacks(n_paths);
  RngStream base(seed);
  parallel_for(n_paths, [&](long i) {
    const MarketPath path = sample(base.substream(i));
    const EpsilonProcess eps = build_epsilon(path, eta, region);
    const RetirementWalk walk = retirement_walk(path, eps);
    slacks[i] = tube_check(path, eps, walk).max_slack;
  });
  TubeEnsembleResult out;
  out.paths = n_paths;
  for (double s : slacks) {
    out.worst_slack = std::max(out.worst_slack, s);
    if (s > 0.0) ++out.violations;
  }
  return out;
}

Outcome criterion1() {
  const long n_paths = 1000;

  FernholzParams fp;
  fp.g = Eigen::Vector3d(0.02, 0.02, 0.02);
  fp.delta = 0.3;
  fp.big_m = 1.0;
  const FernholzModel fern(fp, VolatilitySpec::scaled_identity(3, 0.2),
                           Eigen::Vector3d(1.0, 1.0, 1.0));
  const TimeGrid fern_grid(0.25, 1 << 12);
  const auto fern_res = tube_ensemble(
      [&](RngStream r) { return fern.sample_path(fern_grid, r); },
      DiversityRegion(0.3, 3), 0.1, n_paths, 101);

  const TimeGrid arctan_grid(0.05, 1 << 16);
  const auto arctan_res = tube_ensemble(
      [&](RngStream r) { return arctan_market(arctan_grid, r); },
      DiversityRegion(0.17, 2), 0.1, n_paths, 102);

  const ConditionedSampler cond{VolatilitySpec::scaled_identity(2, 0.2),
                                DiversityRegion(0.2, 2)};
  const TimeGrid cond_grid(0.25, 1 << 12);
  const Eigen::Vector2d s0(1.0, 1.0);
  const auto cond_res = tube_ensemble(
      [&](RngStream r) { return sample_conditioned(cond, cond_grid, s0, r).path; },
      DiversityRegion(0.2, 2), 0.1, n_paths, 103);

  const long violations =
      fern_res.violations + arctan_res.violations + cond_res.violations;
  const double worst = std::max(
      {fern_res.worst_slack, arctan_res.worst_slack, cond_res.worst_slack});
  Outcome o;
  o.pass = violations == 0;
  o.detail = "3x" + std::to_string(n_paths) +
             " paths (fernholz, arctan, conditioned), violations = " +
             std::to_string(violations) + ", worst slack = " + fmt(worst);
  return o;
}

// ---------------------------------------------------------------------------
// 2. Martingale tilt on random nodes + the algebraic instance
// ---------------------------------------------------------------------------

Outcome criterion2() {
  RngStream rng(20240202);
  long done = 0;
  double worst_resid = 0.0, worst_sum = 0.0, min_q = 1.0;
  while (done < 1000) {
    const int dim = 1 + static_cast<int>(rng.uniform() * 3);
    const int k =
        std::max(dim + 1, 2 + static_cast<int>(rng.uniform() * 15));
    Eigen::MatrixXd deltas(k, dim);
    std::vector<unsigned char> retirement(k, 0);
    for (int i = 0; i < k; ++i) {
      const bool retire = rng.uniform() < 0.2;
      retirement[i] = retire ? 1 : 0;
      for (int j = 0; j < dim; ++j)
        deltas(i, j) = retire ? 0.0 : rng.normal() * std::exp(0.5 * rng.normal());
    }
    const auto hull = origin_in_hull_interior(deltas);
    if (!hull.interior || hull.margin < 1e-3) continue;
    Eigen::VectorXd p(k);
    for (int i = 0; i < k; ++i) p[i] = 0.05 + rng.uniform();
    p /= p.sum();
    NodeTiltOptions opt;
    if (rng.uniform() < 0.5)
      opt.budget = 0.5 * deltas.rowwise().squaredNorm().maxCoeff();
    const auto res = tilt_node(deltas, p, retirement, opt);
    const double scale = deltas.rowwise().norm().maxCoeff();
    worst_resid = std::max(worst_resid, res.mart_residual / scale);
    worst_sum = std::max(worst_sum, std::abs(res.q.sum() - 1.0));
    min_q = std::min(min_q, res.q.minCoeff());
    ++done;
  }

  Eigen::MatrixXd two(2, 1);
  two << 1.0, -2.0;
  const auto exact = tilt_node(two, Eigen::Vector2d(0.5, 0.5), {0, 0});
  const double exact_err = std::max(std::abs(exact.q[0] - 2.0 / 3.0),
                                    std::abs(exact.q[1] - 1.0 / 3.0));

  Outcome o;
  o.pass = worst_resid <= 1e-10 && worst_sum <= 1e-12 && min_q > 0.0 &&
           exact_err <= 1e-12;
  o.detail = "1000 nodes: max |sum q d|/|d|max = " + fmt(worst_resid) +
             ", max |sum q - 1| = " + fmt(worst_sum) + ", min q = " + fmt(min_q) +
             ", {+1,-2} error = " + fmt(exact_err);
  return o;
}

// ---------------------------------------------------------------------------
// 3. End-to-end CPS certificate on the arctan market
// ---------------------------------------------------------------------------

Outcome criterion3() {
  const TimeGrid grid(1.0, 1 << 20);
  ArctanModel model;
  TreeParams params;
  params.depth = 3;
  params.branching = 8;
  params.eta = 0.01;
  params.region = DiversityRegion(0.17, 2);

  TiltedTree tree = build_scenario_tree(model, grid, params, RngStream(33));
  martingale_tilt(tree, 0.5, 1);
  const ShadowReport shadow = shadow_price(tree, 1e-10);
  const Certificate cert = cps_certificate(tree, params.eta, 1e-10);

  double max_resid = 0.0;
  bool bounds_ok = true;
  for (const CertificateNode& n : cert.nodes) {
    max_resid = std::max(max_resid, n.mart_residual);
    bounds_ok = bounds_ok && n.in_region && n.tube_slack <= 0.0 &&
                n.ratio_lo >= 1.0 / (1.0 + params.eta) &&
                n.ratio_hi <= 1.0 + params.eta;
  }
  const Certificate reparsed = parse_certificate(to_text(cert));
  const bool roundtrip = to_text(reparsed) == to_text(cert);

  Outcome o;
  o.pass = cert.certified() && bounds_ok && shadow.max_mart_gap <= 1e-10 && roundtrip;
  o.detail = "status = " + cert.status + ", nodes = " +
             std::to_string(cert.nodes.size()) +
             ", max residual = " + fmt(max_resid) +
             ", mart gap = " + fmt(shadow.max_mart_gap) +
             ", max tube slack = " + fmt(shadow.max_tube_slack) +
             (roundtrip ? ", roundtrip ok" : ", ROUNDTRIP BROKEN");
  return o;
}

// ---------------------------------------------------------------------------
// 4. Diversity of the Fernholz model
// ---------------------------------------------------------------------------

Outcome criterion4() {
  FernholzParams fp;
  fp.g = Eigen::Vector3d(0.02, 0.02, 0.02);
  fp.delta = 0.3;
  fp.big_m = 1.0;
  const TimeGrid grid(1.0, 1 << 12);
  const VolatilitySpec vol = VolatilitySpec::scaled_identity(3, 0.2);
  const DriftSpec drift = fernholz_drift_spec(fp, 1e3);
  const ReflectionGuard guard{DiversityRegion(0.3, 3), 1e-6};
  const long n_paths = 1000;

  std::vector<long> violations(n_paths);
  RngStream base(44);
  parallel_for(n_paths, [&](long i) {
    SimulationStats stats;
    const MarketPath p = simulate(grid, Eigen::Vector3d(1.0, 1.0, 1.0), drift, vol,
                                  base.substream(i), guard, &stats);
    long viol = stats.hard_violations;
    // Count any surviving grid point at or past the threshold as well.
    const Eigen::VectorXd m = market_weights(p).max_weights();
    for (int k = 0; k < m.size(); ++k)
      if (m[k] >= 0.7) ++viol;
    violations[i] = viol;
  });
  long total = 0;
  for (long v : violations) total += v;
  const double denom = double(n_paths) * (grid.steps() + 1);
  const double fraction = double(total) / denom;

  Outcome o;
  o.pass = fraction <= 1e-3;
  o.detail = "violation fraction = " + fmt(fraction) + " (budget 0.001) over " +
             std::to_string(n_paths) + " paths";
  return o;
}

// ---------------------------------------------------------------------------
// 5. Arctan diversity bound
// ---------------------------------------------------------------------------

Outcome criterion5() {
  const TimeGrid grid(1.0, 1 << 12);
  const long n_paths = 1000;
  std::vector<double> sups(n_paths);
  RngStream base(55);
  parallel_for(n_paths, [&](long i) {
    const MarketPath p = arctan_market(grid, base.substream(i));
    sups[i] = market_weights(p).max_weights().maxCoeff();
  });
  double sup = 0.0;
  long violations = 0;
  for (double s : sups) {
    sup = std::max(sup, s);
    if (s >= 0.82791) ++violations;
  }
  Outcome o;
  o.pass = violations == 0;
  o.detail = "sup weight = " + fmt(sup) + " < 0.82791, violations = " +
             std::to_string(violations);
  return o;
}

// ---------------------------------------------------------------------------
// 6. BESQ domination
// ---------------------------------------------------------------------------

// The d=2 tolerance is 1e-6 + 10 sqrt(dt): the coupled scheme error is
// chi-square CLT noise of scale sqrt(dt), the same power the d=1 clause of
// the criterion uses.
Outcome criterion6() {
  const TimeGrid grid(1.0, 1 << 12);
  const double sdt = std::sqrt(grid.dt());
  const long n_paths = 1000;

  // d = 2, identity vol, dimension 2: pathwise domination up to scheme noise.
  const VolatilitySpec vol2 = VolatilitySpec::scaled_identity(2, 1.0);
  BesqParams p2;
  p2.dimension = 2.0;
  p2.c = 1.0;
  p2.big_c = 1.0;
  p2.drivers = 2;
  const double tol2 = 1e-6 + 10.0 * sdt;
  std::vector<double> fracs(n_paths);
  RngStream base2(66);
  parallel_for(n_paths, [&](long i) {
    const Eigen::MatrixXd x = simulate_martingale(grid, vol2, base2.substream(i));
    fracs[i] = coupled_comparison(x, grid, vol2, p2, tol2).frac_dominated;
  });
  double dominated = 0.0;
  for (double f : fracs) dominated += f;
  dominated /= n_paths;

  // d = 1: identical SDEs on the same beta.
  const VolatilitySpec vol1 = VolatilitySpec::scaled_identity(1, 1.0);
  BesqParams p1;
  p1.dimension = 1.0;
  p1.c = 1.0;
  p1.big_c = 1.0;
  p1.drivers = 1;
  std::vector<double> gaps(n_paths);
  RngStream base1(67);
  parallel_for(n_paths, [&](long i) {
    const Eigen::MatrixXd x = simulate_martingale(grid, vol1, base1.substream(i));
    gaps[i] = coupled_comparison(x, grid, vol1, p1, 1e-6).max_abs_diff;
  });
  double worst_gap = 0.0;
  for (double g : gaps) worst_gap = std::max(worst_gap, g);

  Outcome o;
  o.pass = dominated >= 0.999 && worst_gap <= 10.0 * sdt;
  o.detail = "d=2 dominated fraction = " + fmt(dominated) +
             " (need >= 0.999, tol = 1e-6 + 10 sqrt(dt)); d=1 max |R-Z| = " +
             fmt(worst_gap) + " <= " + fmt(10.0 * sdt);
  return o;
}

// ---------------------------------------------------------------------------
// 7. Support probability against the reflection-series oracle
// ---------------------------------------------------------------------------

Outcome criterion7() {
  const TimeGrid grid(1.0, 1 << 16);
  const long n_paths = 100000;
  const VolatilitySpec vol = VolatilitySpec::scaled_identity(1, 1.0);
  const auto rep = support_probability(vol, grid, 1.0, n_paths, 1.0, 1.0,
                                       RngStream(77), 20000);
  const double oracle = oracles::brownian_sup_probability(1.0, 1.0);
  const double se = std::sqrt(oracle * (1.0 - oracle) / n_paths);
  const double dev = std::abs(rep.direct.p_hat - oracle);
  Outcome o;
  o.pass = dev <= 3.0 * se;
  o.detail = "estimate = " + fmt(rep.direct.p_hat) + ", oracle = " + fmt(oracle) +
             ", |diff| = " + fmt(dev) + " <= 3 se = " + fmt(3.0 * se) +
             ", besq lower bound = " + fmt(rep.besq_bound.p_hat);
  return o;
}

// ---------------------------------------------------------------------------
// 8. BESQ marginals
// ---------------------------------------------------------------------------

Outcome criterion8() {
  const TimeGrid grid(1.0, 1 << 12);
  const double dim = 2.0;
  const long n_paths = 100000;
  std::vector<double> z_q(n_paths), z_h(n_paths), z_f(n_paths);
  RngStream base(88);
  parallel_for(n_paths, [&](long i) {
    const Eigen::VectorXd z = besq_simulate(dim, grid, base.substream(i));
    z_q[i] = z[grid.steps() / 4];
    z_h[i] = z[grid.steps() / 2];
    z_f[i] = z[grid.steps()];
  });
  const auto m_q = mean_with_se(z_q);
  const auto m_h = mean_with_se(z_h);
  const auto m_f = mean_with_se(z_f);
  const bool means_ok = std::abs(m_q.mean - dim * 0.25) <= 3.0 * m_q.se &&
                        std::abs(m_h.mean - dim * 0.5) <= 3.0 * m_h.se &&
                        std::abs(m_f.mean - dim * 1.0) <= 3.0 * m_f.se;

  const long n_ks = 10000;
  const TimeGrid ks_grid(1.0, 1 << 14);
  std::vector<double> terminal(n_ks);
  RngStream ks_base(89);
  parallel_for(n_ks, [&](long i) {
    terminal[i] = besq_simulate(1.0, ks_grid, ks_base.substream(i))[ks_grid.steps()];
  });
  const double d = ks_statistic(terminal, [](double z) {
    return z <= 0.0 ? 0.0 : std::erf(std::sqrt(z / 2.0));
  });
  const double pval = ks_one_sample_pvalue(d, n_ks);

  Outcome o;
  o.pass = means_ok && pval > 0.01;
  o.detail = "means (t=.25,.5,1): " + fmt(m_q.mean) + "/" + fmt(m_h.mean) + "/" +
             fmt(m_f.mean) + " vs " + fmt(0.5) + "/" + fmt(1.0) + "/" + fmt(2.0) +
             "; BESQ(1) KS p = " + fmt(pval);
  return o;
}

// ---------------------------------------------------------------------------
// 9. Conditioned-model exactness vs the independent filter oracle
// ---------------------------------------------------------------------------

Outcome criterion9() {
  const double sigma = 0.5, delta = 0.3;
  const ConditionedSampler sampler{VolatilitySpec::scaled_identity(2, sigma),
                                   DiversityRegion(delta, 2)};
  const TimeGrid grid(1.0, 1 << 9);
  const Eigen::Vector2d s0(1.0, 1.0);
  const long n = 10000;

  std::vector<double> lib(n);
  RngStream lib_rng(909);
  parallel_for(n, [&](long i) {
    const auto draw = sample_conditioned(sampler, grid, s0, lib_rng.substream(i));
    lib[i] = max_weight(draw.path.values().row(grid.steps()).transpose());
  });

  const Eigen::MatrixXd weights = oracles::filter_sampler_terminal_weights(
      2, sigma, delta, grid, s0, n, RngStream(910));
  std::vector<double> oracle(n);
  for (long i = 0; i < n; ++i) oracle[i] = weights.row(i).maxCoeff();

  const double d = ks_statistic(lib, oracle);
  const double pval = ks_two_sample_pvalue(d, n, n);
  Outcome o;
  o.pass = pval > 0.01;
  o.detail = "two-sample KS on mu_max(T): D = " + fmt(d) + ", p = " + fmt(pval) +
             " (10000 accepted paths each)";
  return o;
}

// ---------------------------------------------------------------------------
// 10. Epsilon-process conditions
// ---------------------------------------------------------------------------

Outcome criterion10() {
  const long n_paths = 1000;
  const TimeGrid grid(1.0, 1 << 10);
  const DiversityRegion arctan_region(0.17, 2);
  const DiversityRegion pre_region(0.3, 2);
  const VolatilitySpec pre_vol = VolatilitySpec::scaled_identity(2, 0.3);
  const DriftSpec pre_drift = premodel_drift(pre_vol);
  const double etas[3] = {0.02, 0.1, 0.5};

  std::atomic<long> monotone_viol{0}, clamp_viol{0}, lipschitz_viol{0};
  RngStream base(1010);
  parallel_for(n_paths, [&](long i) {
    const bool use_arctan = i % 2 == 0;
    const double eta = etas[i % 3];
    MarketPath path = use_arctan
                          ? arctan_market(grid, base.substream(i))
                          : simulate(grid, Eigen::Vector2d(1.0, 1.0), pre_drift,
                                     pre_vol, base.substream(i));
    const DiversityRegion& region = use_arctan ? arctan_region : pre_region;
    // The conditioned pre-model may leave O(0.3); keep paths that stay inside
    // so the construction's precondition holds.
    bool inside = true;
    for (int k = 0; k <= grid.steps() && inside; ++k)
      inside = region.contains(path.row(k).transpose());
    if (!inside) return;

    const EpsilonProcess eps = build_epsilon(path, eta, region);
    for (int k = 1; k <= grid.steps(); ++k)
      if (eps.values[k] > eps.values[k - 1]) ++monotone_viol;
    for (int k = 0; k <= grid.steps(); ++k)
      if (!(eps.values[k] <
            dist_to_complement(path.row(k).transpose(), region)))
        ++clamp_viol;
    // Grid Lipschitz condition with L = eta for the base rule.
    for (int s = 0; s <= grid.steps(); s += 7) {
      double run = 0.0;
      for (int t = s + 1; t <= grid.steps(); ++t) {
        run = std::max(run, (path.values().row(t) - path.values().row(s)).norm());
        if (std::abs(eps.base[t] - eps.base[s]) > eta * run + 1e-12)
          ++lipschitz_viol;
      }
    }
  });

  Outcome o;
  const long total = monotone_viol + clamp_viol + lipschitz_viol;
  o.pass = total == 0;
  o.detail = "monotone/clamp/lipschitz violations = " +
             std::to_string(monotone_viol.load()) + "/" +
             std::to_string(clamp_viol.load()) + "/" +
             std::to_string(lipschitz_viol.load());
  return o;
}

// ---------------------------------------------------------------------------
// 11. CLI determinism over the shipped criterion configs
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome criterion11() {
  const char* cfg_env = std::getenv("DIVMKT_CONFIG_DIR");
  const char* bin_env = std::getenv("DIVMKT_CLI_BIN");
  const fs::path cfg_dir = cfg_env ? cfg_env : "configs";
  const std::string bin = bin_env ? bin_env : "./divmkt";
  if (!fs::exists(cfg_dir))
    return Outcome{false, "config directory not found: " + cfg_dir.string()};

  std::vector<fs::path> configs;
  for (const auto& entry : fs::directory_iterator(cfg_dir))
    if (entry.path().extension() == ".cfg") configs.push_back(entry.path());
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) return Outcome{false, "no configs found"};

  const fs::path work = fs::temp_directory_path() / "divmkt_determinism";
  fs::remove_all(work);
  fs::create_directories(work);

  long checked = 0;
  for (const auto& cfg : configs) {
    const fs::path out1 = work / (cfg.stem().string() + "_a");
    const fs::path out2 = work / (cfg.stem().string() + "_b");
    for (const fs::path& out : {out1, out2}) {
      const std::string cmd = bin + " run --config " + cfg.string() + " --seed 7 --out " +
                              out.string() + " > /dev/null 2>&1";
      const int rc = std::system(cmd.c_str());
      if (rc != 0)
        return Outcome{false, cfg.filename().string() + ": exit code " +
                                  std::to_string(rc)};
    }
    if (slurp(out1 / "results.csv") != slurp(out2 / "results.csv"))
      return Outcome{false, cfg.filename().string() + ": results.csv differs"};
    if (slurp(out1 / "summary.json") != slurp(out2 / "summary.json"))
      return Outcome{false, cfg.filename().string() + ": summary.json differs"};
    if (fs::exists(out1 / "certificate.txt") &&
        slurp(out1 / "certificate.txt") != slurp(out2 / "certificate.txt"))
      return Outcome{false, cfg.filename().string() + ": certificate.txt differs"};
    ++checked;
  }
  fs::remove_all(work);
  Outcome o;
  o.pass = true;
  o.detail = std::to_string(checked) + " configs ran twice with byte-identical outputs";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) only = std::atoi(argv[++i]);
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"tube property over fernholz/arctan/conditioned", criterion1},
      {"martingale tilt on random scenario nodes", criterion2},
      {"end-to-end cps certificate (arctan, eta=0.01, depth 3 x 8)", criterion3},
      {"fernholz diversity violation budget", criterion4},
      {"arctan sup-weight bound", criterion5},
      {"besq domination (coupled comparison)", criterion6},
      {"support probability vs reflection-series oracle", criterion7},
      {"besq marginals (means + KS)", criterion8},
      {"conditioned sampler vs filter oracle (KS)", criterion9},
      {"epsilon-process conditions", criterion10},
      {"cli determinism over criterion configs", criterion11},
  };

  bool all_pass = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (only != 0 && only != number) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("%s criterion-%d: %s [%s] (%.1fs)\n",
                outcome.pass ? "PASS" : "FAIL", number, criteria[i].first.c_str(),
                outcome.detail.c_str(), secs);
    std::fflush(stdout);
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
