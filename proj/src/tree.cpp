#include "divmkt/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "divmkt/errors.hpp"
#include "divmkt/hull.hpp"

namespace divmkt {

namespace {

double pointwise_eps(const Eigen::VectorXd& price, double eta,
                     const DiversityRegion& region) {
  const double base = eta / (1.0 + eta) * price.minCoeff();
  return epsilon_pointwise(base, dist_to_complement(price, region));
}

}  // namespace

WalkChild sample_walk_child(const PathModel& model, const TimeGrid& grid, int k0,
                            const Eigen::VectorXd& price0, double eps_in,
                            double eta, const DiversityRegion& region,
                            RngStream rng) {
  if (k0 < 0 || k0 >= grid.steps())
    throw std::invalid_argument("sample_walk_child: k0 must precede the horizon");
  if (!(eps_in > 0.0))
    throw std::invalid_argument("sample_walk_child: epsilon state must be positive");

  const int n_steps = grid.steps();
  const int block = std::max(1, model.preferred_block());

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> eps_rows;
  rows.push_back(price0);
  eps_rows.push_back(eps_in);

  double eps = eps_in;
  Eigen::VectorXd state = price0;
  int k = k0;
  int trigger = -1;
  std::uint64_t block_id = 0;
  while (k < n_steps && trigger < 0) {
    const int k_to = static_cast<int>(
        std::min<long>(n_steps, static_cast<long>(k) + block));
    const Eigen::MatrixXd seg =
        model.continue_path(grid, k, k_to, state, rng.substream(block_id++));
    for (int r = 1; r <= k_to - k; ++r) {
      const Eigen::VectorXd s = seg.row(r);
      eps = std::min(eps, pointwise_eps(s, eta, region));
      if (!(eps > 0.0))
        throw std::domain_error("sample_walk_child: continuation left O(delta)");
      rows.push_back(s);
      eps_rows.push_back(eps);
      if ((s - price0).norm() > eps / 2.0) {
        trigger = k + r;
        break;
      }
    }
    state = rows.back();
    k = k0 + static_cast<int>(rows.size()) - 1;
  }

  WalkChild child;
  child.end_price = rows.back();
  child.eps_end = eps;
  child.segment.resize(static_cast<int>(rows.size()), price0.size());
  child.eps_segment.resize(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    child.segment.row(static_cast<int>(i)) = rows[i];
    child.eps_segment[static_cast<int>(i)] = eps_rows[i];
  }

  if (trigger >= 0 && trigger < n_steps) {
    child.end_index = trigger;
    child.retired = false;
    const Eigen::VectorXd move = child.end_price - price0;
    const double r = move.norm();
    const double radius = eps / 2.0;
    child.pivot = price0 + (radius / r) * move;
    child.overshoot = r - radius;
  } else {
    // Horizon reached (an exit landing exactly on T also retires).
    child.end_index = n_steps;
    child.retired = true;
  }
  return child;
}

TiltedTree build_scenario_tree(const PathModel& model, const TimeGrid& grid,
                               const TreeParams& params, RngStream rng) {
  if (params.depth < 0 || params.branching < 2)
    throw std::invalid_argument("build_scenario_tree: need depth >= 0, branching >= 2");
  const Eigen::VectorXd s0 = model.initial_state();
  if (!params.region.contains(s0))
    throw std::invalid_argument("build_scenario_tree: initial state outside O(delta)");

  TiltedTree tree;
  tree.grid = grid;
  tree.eta = params.eta;
  tree.region = params.region;
  tree.depth = params.depth;
  tree.branching = params.branching;

  TreeNode root;
  root.id = 0;
  root.pivot = s0;
  root.price = s0;
  root.eps_state = pointwise_eps(s0, params.eta, params.region);
  root.segment = s0.transpose();
  root.eps_segment = Eigen::VectorXd::Constant(1, root.eps_state);
  tree.nodes.push_back(root);

  std::deque<int> queue{0};
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    // Snapshot: growing tree.nodes invalidates references.
    const TreeNode node = tree.nodes[id];
    if (node.depth >= params.depth || node.retired) continue;

    RngStream node_rng = rng.substream(static_cast<std::uint64_t>(id));
    std::vector<WalkChild> bundle;
    bool accepted = false;
    for (int attempt = 0; attempt < params.max_resample && !accepted; ++attempt) {
      bundle.clear();
      RngStream attempt_rng = node_rng.substream(attempt);
      Eigen::MatrixXd increments(params.branching, model.assets());
      for (int c = 0; c < params.branching; ++c) {
        WalkChild w =
            sample_walk_child(model, grid, node.grid_index, node.price,
                              node.eps_state, params.eta, params.region,
                              attempt_rng.substream(c));
        if (w.retired) {
          increments.row(c).setZero();
        } else {
          increments.row(c) = (w.pivot - node.pivot).transpose();
        }
        bundle.push_back(std::move(w));
      }
      if (increments.rowwise().norm().maxCoeff() == 0.0) {
        accepted = true;  // all-retirement bundle: tilt is trivial
      } else {
        accepted = origin_in_hull_interior(increments).interior;
      }
    }
    if (!accepted)
      throw NoTiltExists(
          "build_scenario_tree: hull condition not witnessed after resampling");

    for (int c = 0; c < params.branching; ++c) {
      WalkChild& w = bundle[c];
      TreeNode child;
      child.id = static_cast<int>(tree.nodes.size());
      child.parent = id;
      child.depth = node.depth + 1;
      child.grid_index = w.end_index;
      child.retired = w.retired;
      child.pivot = w.retired ? node.pivot : w.pivot;
      child.price = std::move(w.end_price);
      child.segment = std::move(w.segment);
      child.eps_segment = std::move(w.eps_segment);
      child.eps_state = w.eps_end;
      child.delta = child.pivot - node.pivot;
      tree.nodes[id].children.push_back(child.id);
      queue.push_back(child.id);
      tree.nodes.push_back(std::move(child));
    }
    tree.nodes[id].p = Eigen::VectorXd::Constant(params.branching,
                                                 1.0 / params.branching);
  }
  return tree;
}

void martingale_tilt(TiltedTree& tree, double retirement_floor,
                     int budget_exponent, double mart_tol) {
  for (TreeNode& node : tree.nodes) {
    if (node.children.empty()) continue;
    const int k = static_cast<int>(node.children.size());
    Eigen::MatrixXd deltas(k, tree.nodes[node.children[0]].pivot.size());
    std::vector<unsigned char> retirement(k, 0);
    for (int c = 0; c < k; ++c) {
      const TreeNode& child = tree.nodes[node.children[c]];
      deltas.row(c) = child.delta;
      retirement[c] = child.retired ? 1 : 0;
    }
    NodeTiltOptions opt;
    opt.retirement_floor = retirement_floor;
    opt.mart_tol = mart_tol;
    const double dd_max = deltas.rowwise().squaredNorm().maxCoeff();
    opt.budget = std::ldexp(dd_max, -(budget_exponent + node.depth));
    NodeTiltResult res = tilt_node(deltas, node.p, retirement, opt);
    node.q = std::move(res.q);
    node.mart_residual = res.mart_residual;
    node.sum_q_dd = res.sum_q_dd;
    node.budget_relaxed = res.budget_relaxed;
  }
  tree.tilted = true;
}

ShadowReport shadow_price(TiltedTree& tree, double mart_tol) {
  if (!tree.tilted)
    throw std::logic_error("shadow_price: tilt the tree first");
  ShadowReport report;
  report.max_tube_slack = -std::numeric_limits<double>::infinity();

  // Nodes are stored breadth-first, so a reverse sweep is backward induction.
  for (auto it = tree.nodes.rbegin(); it != tree.nodes.rend(); ++it) {
    TreeNode& node = *it;
    if (node.children.empty()) {
      node.shadow = node.pivot;
      continue;
    }
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(node.pivot.size());
    for (std::size_t c = 0; c < node.children.size(); ++c)
      acc += node.q[static_cast<int>(c)] * tree.nodes[node.children[c]].shadow;
    node.shadow = acc;
    const double gap = (node.shadow - node.pivot).norm();
    report.max_mart_gap = std::max(report.max_mart_gap, gap);
    if (gap > mart_tol * std::max(1.0, node.pivot.norm()))
      throw NumericalFailure("shadow_price: martingale consistency failed at node " +
                             std::to_string(node.id));
  }

  // Tube along every branch: on (tau_n, tau_{n+1}] the conditional value of
  // the limit pivot is X_{n+1}, so each node's incoming segment is checked
  // against its own pivot; the left bracket end is covered by the parent.
  for (const TreeNode& node : tree.nodes) {
    if (node.parent < 0) continue;
    for (int r = 0; r < node.segment.rows(); ++r) {
      const double slack =
          (node.segment.row(r).transpose() - node.pivot).norm() -
          node.eps_segment[r];
      report.max_tube_slack = std::max(report.max_tube_slack, slack);
      ++report.tube_points;
    }
  }
  if (tree.nodes.size() == 1) report.max_tube_slack = -tree.root().eps_state;
  return report;
}

SupportProbeReport increment_support_probe(const PathModel& model,
                                           const TimeGrid& grid, int pivot_index,
                                           const Eigen::VectorXd& pivot_price,
                                           double eps0, double l0, double eta,
                                           const DiversityRegion& region,
                                           long n_samples, double theta_cov,
                                           RngStream rng) {
  if (n_samples < 1)
    throw std::invalid_argument("increment_support_probe: n_samples >= 1");
  if (!(eps0 > 0.0) || !(l0 >= 0.0))
    throw std::invalid_argument("increment_support_probe: bad eps0/L0");

  const int n = static_cast<int>(pivot_price.size());
  SupportProbeReport report;
  report.samples = n_samples;
  report.delta_star = eps0 / (4.0 + 2.0 * l0);

  Eigen::MatrixXd increments(n_samples, n);
  for (long i = 0; i < n_samples; ++i) {
    WalkChild w = sample_walk_child(model, grid, pivot_index, pivot_price, eps0,
                                    eta, region, rng.substream(i));
    if (w.retired) {
      ++report.retirements;
      increments.row(i).setZero();
    } else {
      increments.row(i) = w.pivot - pivot_price;
    }
  }
  report.retirement_prob =
      static_cast<double>(report.retirements) / static_cast<double>(n_samples);

  const double nonzero = (increments.rowwise().norm().array() > 0.0).count();
  if (nonzero == 0) {
    report.conclusive = false;  // degenerate model: tilting is already trivial
    return report;
  }

  const auto hull = origin_in_hull_interior(increments);
  report.hull_interior = hull.interior;
  report.hull_margin = hull.margin;

  // Directional coverage of the sphere projection, per coordinate plane.
  const double ds = report.delta_star;
  const auto project = [ds](const Eigen::VectorXd& y) {
    const double r = y.norm();
    return r >= ds ? Eigen::VectorXd(ds / r * y) : y;
  };
  const int n_dirs = 64;
  if (n == 1) {
    bool plus = false, minus = false;
    for (long i = 0; i < n_samples; ++i) {
      if (increments(i, 0) > 0.0) plus = true;
      if (increments(i, 0) < 0.0) minus = true;
    }
    report.coverage.push_back((plus ? 0.5 : 0.0) + (minus ? 0.5 : 0.0));
  } else {
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        std::vector<char> covered(n_dirs, 0);
        for (long i = 0; i < n_samples; ++i) {
          const Eigen::VectorXd pr = project(increments.row(i));
          const double x = pr[a], y = pr[b];
          if (x * x + y * y < 1e-24) continue;
          const double angle = std::atan2(y, x);
          for (int m = 0; m < n_dirs; ++m) {
            const double target = -M_PI + (m + 0.5) * (2.0 * M_PI / n_dirs);
            double diff = std::abs(angle - target);
            diff = std::min(diff, 2.0 * M_PI - diff);
            if (diff <= theta_cov) covered[m] = 1;
          }
        }
        double frac = 0.0;
        for (char c : covered) frac += c;
        report.coverage.push_back(frac / n_dirs);
      }
    }
  }
  report.coverage_min = *std::min_element(report.coverage.begin(), report.coverage.end());
  double sum = 0.0;
  for (double c : report.coverage) sum += c;
  report.coverage_avg = sum / static_cast<double>(report.coverage.size());
  report.conclusive = true;
  return report;
}

}  // namespace divmkt
