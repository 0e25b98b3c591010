#include "runner.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>
#include <vector>

#include "divmkt/bessel.hpp"
#include "divmkt/certificate.hpp"
#include "divmkt/conditioned.hpp"
#include "divmkt/cps.hpp"
#include "divmkt/diversity.hpp"
#include "divmkt/errors.hpp"
#include "divmkt/parallel.hpp"
#include "divmkt/path_model.hpp"
#include "divmkt/tree.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace divmkt::cli {

namespace {

std::string fmt_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

class CsvSink {
 public:
  CsvSink() { rows_ << "path_id,t,series,value\n"; }

  void add(long path_id, double t, const std::string& series, double value) {
    rows_ << path_id << ',' << fmt_double(t) << ',' << series << ','
          << fmt_double(value) << '\n';
  }

  std::string str() const { return rows_.str(); }

 private:
  std::ostringstream rows_;
};

void atomic_write(const fs::path& target, const std::string& content,
                  std::vector<fs::path>* written) {
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
  written->push_back(target);
}

VolatilitySpec scalar_vol(int n, double sigma) {
  if (sigma == 0.0) {
    // Frozen market: a zero field is a legal volatility with zero bounds.
    return VolatilitySpec::callback(
        n, n,
        [n](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(n, n); },
        0.0, 0.0);
  }
  return VolatilitySpec::scaled_identity(n, sigma);
}

std::unique_ptr<PathModel> make_model(const ModelConfig& m) {
  switch (m.kind) {
    case ModelKind::kArctan:
      return std::make_unique<ArctanModel>();
    case ModelKind::kFernholz: {
      FernholzParams p;
      p.g = m.g;
      p.delta = m.delta;
      p.big_m = m.big_m;
      return std::make_unique<FernholzModel>(
          p, VolatilitySpec::scaled_identity(m.assets, m.sigma), m.s0,
          m.gamma_cap);
    }
    case ModelKind::kConditioned:
      return std::make_unique<ConditionedModel>(scalar_vol(m.assets, m.sigma),
                                                DiversityRegion(m.delta, m.assets),
                                                m.s0);
    case ModelKind::kConstantVol:
      return std::make_unique<PreModel>(scalar_vol(m.assets, m.sigma), m.s0);
  }
  throw std::logic_error("make_model: unreachable");
}

json base_summary(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = kind_name(cfg.kind);
  j["seed"] = cfg.mc.seed;
  j["grid"] = {{"T", cfg.grid.horizon}, {"N", cfg.grid.steps}};
  j["paths"] = cfg.mc.paths;
  return j;
}

json wilson_json(const WilsonInterval& w) {
  return json{{"p_hat", w.p_hat}, {"lo", w.lo}, {"hi", w.hi},
              {"successes", w.successes}, {"trials", w.trials}};
}

// ---------------------------------------------------------------------------
// per-kind runners
// ---------------------------------------------------------------------------

void run_simulate(const ExperimentConfig& cfg, CsvSink& csv, json& summary) {
  const TimeGrid grid(cfg.grid.horizon, cfg.grid.steps);
  const auto model = make_model(cfg.model);
  RngStream base(cfg.mc.seed);

  const int n = cfg.model.assets;
  std::vector<Eigen::VectorXd> terminal(cfg.mc.paths);
  const long csv_paths = std::min<long>(cfg.mc.paths, cfg.output.csv_max_paths);
  std::vector<MarketPath> kept;
  kept.reserve(csv_paths);
  for (long i = 0; i < csv_paths; ++i)
    kept.push_back(model->sample_path(grid, base.substream(i)));
  parallel_for(cfg.mc.paths, [&](long i) {
    if (i < csv_paths) {
      terminal[i] = kept[i].values().row(grid.steps());
      return;
    }
    terminal[i] =
        model->sample_path(grid, base.substream(i)).values().row(grid.steps());
  });

  for (long i = 0; i < csv_paths; ++i) {
    for (int k = 0; k <= grid.steps(); k += cfg.output.csv_stride)
      for (int a = 0; a < n; ++a)
        csv.add(i, grid.time(k), "S" + std::to_string(a + 1),
                kept[i].values()(k, a));
  }

  json stats = json::array();
  for (int a = 0; a < n; ++a) {
    double mean = 0.0;
    for (const auto& t : terminal) mean += t[a];
    mean /= cfg.mc.paths;
    double var = 0.0;
    for (const auto& t : terminal) var += (t[a] - mean) * (t[a] - mean);
    var = cfg.mc.paths > 1 ? var / (cfg.mc.paths - 1) : 0.0;
    stats.push_back({{"asset", a + 1}, {"terminal_mean", mean}, {"terminal_var", var}});
  }
  summary["terminal"] = stats;
}

void run_diversity(const ExperimentConfig& cfg, CsvSink& csv, json& summary) {
  const TimeGrid grid(cfg.grid.horizon, cfg.grid.steps);
  const auto model = make_model(cfg.model);
  RngStream base(cfg.mc.seed);

  long diverse = 0, weak = 0, violations = 0;
  double sup = 0.0;
  std::vector<MarketPath> ensemble;
  const long keep = std::min<long>(cfg.mc.paths, 256);
  std::vector<double> sups(cfg.mc.paths);
  std::vector<long> viol(cfg.mc.paths);
  std::vector<unsigned char> div_flags(cfg.mc.paths), weak_flags(cfg.mc.paths);
  for (long i = 0; i < cfg.mc.paths; ++i) {
    MarketPath p = model->sample_path(grid, base.substream(i));
    const auto verdict = diversity_verdict(market_weights(p), cfg.model.delta);
    sups[i] = verdict.max_weight_sup;
    viol[i] = verdict.violation_count;
    div_flags[i] = verdict.diverse;
    weak_flags[i] = verdict.weak_diverse;
    if (i < cfg.output.csv_max_paths) {
      const Eigen::VectorXd m = market_weights(p).max_weights();
      for (int k = 0; k <= grid.steps(); k += cfg.output.csv_stride)
        csv.add(i, grid.time(k), "mu_max", m[k]);
    }
    if (i < keep) ensemble.push_back(std::move(p));
  }
  for (long i = 0; i < cfg.mc.paths; ++i) {
    diverse += div_flags[i];
    weak += weak_flags[i];
    violations += viol[i];
    sup = std::max(sup, sups[i]);
  }

  summary["delta"] = cfg.model.delta;
  summary["diverse_fraction"] = double(diverse) / cfg.mc.paths;
  summary["weak_diverse_fraction"] = double(weak) / cfg.mc.paths;
  summary["max_weight_sup"] = sup;
  summary["violation_fraction"] =
      double(violations) / (double(cfg.mc.paths) * (grid.steps() + 1));

  const auto rel = relative_performance(ensemble,
                                        PortfolioSpec::equal_weight(cfg.model.assets),
                                        PortfolioSpec::market(), 1.0);
  summary["relative_performance"] = {
      {"pi", "equal_weight"},
      {"rho", "market"},
      {"prob_geq", wilson_json(rel.prob_geq)},
      {"prob_gt", wilson_json(rel.prob_gt)},
      {"mean_log_ratio", rel.log_ratio.mean},
      {"se_log_ratio", rel.log_ratio.se},
      {"note", rel.note}};
}

void run_conditioned(const ExperimentConfig& cfg, CsvSink& csv, json& summary) {
  const TimeGrid grid(cfg.grid.horizon, cfg.grid.steps);
  ConditionedSampler sampler{scalar_vol(cfg.model.assets, cfg.model.sigma),
                             DiversityRegion(cfg.model.delta, cfg.model.assets)};
  RngStream base(cfg.mc.seed);

  const auto rate = acceptance_rate(sampler, grid, cfg.model.s0, cfg.mc.paths,
                                    base.substream(1));
  summary["acceptance"] = wilson_json(rate);

  RngStream draw_rng = base.substream(2);
  long total_attempts = 0;
  const long n_draws = std::min<long>(cfg.output.csv_max_paths, cfg.mc.paths);
  for (long i = 0; i < n_draws; ++i) {
    const auto draw =
        sample_conditioned(sampler, grid, cfg.model.s0, draw_rng.substream(i));
    total_attempts += draw.attempts;
    const Eigen::VectorXd m = market_weights(draw.path).max_weights();
    for (int k = 0; k <= grid.steps(); k += cfg.output.csv_stride)
      csv.add(i, grid.time(k), "mu_max", m[k]);
  }
  summary["drawn_paths"] = n_draws;
  summary["mean_attempts_per_draw"] =
      n_draws > 0 ? double(total_attempts) / n_draws : 0.0;
}

int run_cps(const ExperimentConfig& cfg, CsvSink& csv, json& summary,
            std::string* certificate_text) {
  const TimeGrid grid(cfg.grid.horizon, cfg.grid.steps);
  const auto model = make_model(cfg.model);

  TreeParams params;
  params.depth = cfg.tree.depth;
  params.branching = cfg.tree.branching;
  params.eta = cfg.model.eta;
  params.region = DiversityRegion(cfg.model.delta, cfg.model.assets);

  TiltedTree tree = build_scenario_tree(*model, grid, params, RngStream(cfg.mc.seed));
  martingale_tilt(tree, cfg.tree.retirement_floor, cfg.tree.budget_exponent);
  const ShadowReport shadow = shadow_price(tree);
  const Certificate cert = cps_certificate(tree, cfg.model.eta, cfg.tree.mart_tol);
  *certificate_text = to_text(cert);

  long relaxed = 0;
  double max_residual = 0.0;
  for (const TreeNode& node : tree.nodes) {
    relaxed += node.budget_relaxed ? 1 : 0;
    max_residual = std::max(max_residual, node.mart_residual);
    csv.add(node.id, grid.time(node.grid_index), "mart_residual", node.mart_residual);
    csv.add(node.id, grid.time(node.grid_index), "eps_state", node.eps_state);
  }
  for (const CertificateNode& node : cert.nodes)
    csv.add(node.id, grid.time(node.grid_index), "tube_slack", node.tube_slack);

  summary["certificate"] = {{"status", cert.status},
                            {"offending_node", cert.offending_node},
                            {"nodes", cert.nodes.size()},
                            {"eta", cfg.model.eta},
                            {"max_mart_residual", max_residual},
                            {"max_mart_gap", shadow.max_mart_gap},
                            {"max_tube_slack", shadow.max_tube_slack},
                            {"budget_relaxed_nodes", relaxed}};
  return cert.certified() ? kExitOk : kExitCertificateFailed;
}

void run_bessel(const ExperimentConfig& cfg, CsvSink& csv, json& summary) {
  const TimeGrid grid(cfg.grid.horizon, cfg.grid.steps);
  const int d = cfg.model.drivers;
  const VolatilitySpec vol = VolatilitySpec::scaled_identity(d, cfg.model.sigma);
  BesqParams params;
  params.dimension = cfg.bessel.dimension;
  params.c = cfg.bessel.c;
  params.big_c = cfg.bessel.big_c;
  params.drivers = d;
  params.validate();

  RngStream base(cfg.mc.seed);
  std::vector<double> max_diffs(cfg.mc.paths), fracs(cfg.mc.paths);
  parallel_for(cfg.mc.paths, [&](long i) {
    const Eigen::MatrixXd x = simulate_martingale(grid, vol, base.substream(i));
    const auto rep = coupled_comparison(x, grid, vol, params, cfg.bessel.tol_cmp);
    max_diffs[i] = rep.max_diff;
    fracs[i] = rep.frac_dominated;
  });
  double worst = -1e300, frac_sum = 0.0;
  for (long i = 0; i < cfg.mc.paths; ++i) {
    worst = std::max(worst, max_diffs[i]);
    frac_sum += fracs[i];
  }
  summary["domination"] = {{"tol", cfg.bessel.tol_cmp},
                           {"max_diff", worst},
                           {"mean_frac_dominated", frac_sum / cfg.mc.paths}};

  // One representative coupled pair for plotting.
  {
    const Eigen::MatrixXd x = simulate_martingale(grid, vol, base.substream(0));
    const auto rad = radial_decompose(x, grid, vol, params.c, params.big_c);
    Eigen::VectorXd clock_inc(grid.steps());
    for (int k = 0; k < grid.steps(); ++k)
      clock_inc[k] = rad.qvar_n[k + 1] - rad.qvar_n[k];
    const Eigen::VectorXd z =
        besq_on_clock(params.dimension, rad.beta_increments, clock_inc);
    for (int k = 0; k <= grid.steps(); k += cfg.output.csv_stride) {
      csv.add(0, grid.time(k), "R", rad.r[k]);
      csv.add(0, grid.time(k), "Z", z[k]);
    }
  }

  // Marginal moments of the plain BESQ scheme.
  RngStream mbase = base.substream(0xBE5ULL);
  std::vector<double> z_quarter(cfg.mc.paths), z_half(cfg.mc.paths), z_full(cfg.mc.paths);
  const int n_steps = grid.steps();
  parallel_for(cfg.mc.paths, [&](long i) {
    const Eigen::VectorXd z =
        besq_simulate(cfg.bessel.dimension, grid, mbase.substream(i));
    z_quarter[i] = z[n_steps / 4];
    z_half[i] = z[n_steps / 2];
    z_full[i] = z[n_steps];
  });
  const auto m1 = mean_with_se(z_quarter);
  const auto m2 = mean_with_se(z_half);
  const auto m3 = mean_with_se(z_full);
  summary["besq_moments"] = {
      {"dimension", cfg.bessel.dimension},
      {"quarter", {{"t", grid.time(n_steps / 4)}, {"mean", m1.mean}, {"se", m1.se}}},
      {"half", {{"t", grid.time(n_steps / 2)}, {"mean", m2.mean}, {"se", m2.se}}},
      {"full", {{"t", grid.time(n_steps)}, {"mean", m3.mean}, {"se", m3.se}}}};
}

void run_cfs_probe(const ExperimentConfig& cfg, CsvSink& csv, json& summary) {
  const TimeGrid grid(cfg.grid.horizon, cfg.grid.steps);
  RngStream base(cfg.mc.seed);

  // Small-ball probability of the driftless martingale, with its BESQ bound.
  const VolatilitySpec vol =
      VolatilitySpec::scaled_identity(cfg.model.drivers, cfg.model.sigma);
  const double a_level = cfg.model.sigma * cfg.model.sigma;
  const auto support =
      support_probability(vol, grid, cfg.bessel.eps, cfg.mc.paths,
                          a_level * (1.0 - 1e-9), a_level * (1.0 + 1e-9),
                          base.substream(1));
  summary["support_probability"] = {{"eps", cfg.bessel.eps},
                                    {"direct", wilson_json(support.direct)},
                                    {"besq_bound", wilson_json(support.besq_bound)}};
  csv.add(0, grid.horizon(), "support_p_hat", support.direct.p_hat);
  csv.add(0, grid.horizon(), "besq_bound_p_hat", support.besq_bound.p_hat);

  // Conditional-support probe on the configured market model: a linear ramp
  // from the prefix end toward the region boundary.
  const auto model = make_model(cfg.model);
  const DiversityRegion region(cfg.model.delta, cfg.model.assets);
  const int t_index = cfg.probe.t_index;
  Eigen::MatrixXd prefix;
  if (t_index > 0) {
    prefix = model->continue_path(grid, 0, t_index, model->initial_state(),
                                  base.substream(2));
  } else {
    prefix = model->initial_state().transpose();
  }
  const Eigen::VectorXd state = prefix.row(t_index);
  const double reach = dist_to_complement(state, region);
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(cfg.model.assets);
  direction[max_weight_index(state)] = 1.0;
  const int tail = grid.steps() - t_index;
  Eigen::MatrixXd target(tail + 1, cfg.model.assets);
  for (int r = 0; r <= tail; ++r)
    target.row(r) =
        state + (cfg.probe.ramp_scale * reach * r / tail) * direction;
  const auto est = cfs_probe(*model, grid, prefix, t_index, target,
                             cfg.probe.eta_tube, cfg.mc.paths, base.substream(3));
  summary["cfs_probe"] = {{"t_index", t_index},
                          {"eta_tube", cfg.probe.eta_tube},
                          {"ramp_scale", cfg.probe.ramp_scale},
                          {"estimate", wilson_json(est.prob)}};
  csv.add(0, grid.horizon(), "cfs_p_hat", est.prob.p_hat);
}

}  // namespace

int run_experiment(ExperimentConfig cfg,
                   const std::optional<std::uint64_t>& seed_override,
                   const std::optional<std::string>& out_override,
                   std::string* error) {
  if (seed_override) cfg.mc.seed = *seed_override;
  if (out_override) cfg.output.dir = *out_override;

  const auto violations = validate(cfg);
  if (!violations.empty()) {
    *error = "validation: " + violations.front() +
             (violations.size() > 1
                  ? " (+" + std::to_string(violations.size() - 1) + " more)"
                  : "");
    return kExitValidation;
  }

  std::vector<fs::path> written;
  try {
    fs::create_directories(cfg.output.dir);
    CsvSink csv;
    json summary = base_summary(cfg);
    std::string certificate_text;
    int code = kExitOk;

    switch (cfg.kind) {
      case ExperimentKind::kSimulate: run_simulate(cfg, csv, summary); break;
      case ExperimentKind::kDiversity: run_diversity(cfg, csv, summary); break;
      case ExperimentKind::kConditioned: run_conditioned(cfg, csv, summary); break;
      case ExperimentKind::kCps:
        code = run_cps(cfg, csv, summary, &certificate_text);
        break;
      case ExperimentKind::kBessel: run_bessel(cfg, csv, summary); break;
      case ExperimentKind::kCfsProbe: run_cfs_probe(cfg, csv, summary); break;
    }

    const fs::path dir(cfg.output.dir);
    if (cfg.output.csv) atomic_write(dir / "results.csv", csv.str(), &written);
    if (cfg.output.json)
      atomic_write(dir / "summary.json", summary.dump(2) + "\n", &written);
    if (!certificate_text.empty())
      atomic_write(dir / "certificate.txt", certificate_text, &written);
    if (code == kExitCertificateFailed) *error = "certificate failed";
    return code;
  } catch (const std::exception& e) {
    // Divergence, exhausted rejection budgets, failed hull witnesses: anything
    // breaking mid-run removes partial outputs and reports a numerical error.
    for (const auto& f : written) fs::remove(f);
    *error = std::string("numerical: ") + e.what();
    return kExitNumerical;
  }
}

}  // namespace divmkt::cli
