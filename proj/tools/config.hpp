#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace divmkt::cli {

enum class ExperimentKind {
  kSimulate,
  kDiversity,
  kConditioned,
  kCps,
  kBessel,
  kCfsProbe,
};

enum class ModelKind { kFernholz, kArctan, kConditioned, kConstantVol };

struct ModelConfig {
  ModelKind kind = ModelKind::kConstantVol;
  int assets = 2;
  int drivers = 2;
  double sigma = 0.2;       // scalar volatility for constant-form models
  double delta = 0.2;       // region parameter
  double eta = 0.1;         // tube parameter
  Eigen::VectorXd g;        // fernholz growth rates
  double big_m = 1.0;
  double gamma_cap = 1e3;
  Eigen::VectorXd s0;
};

struct GridConfig {
  double horizon = 1.0;
  int steps = 4096;
};

struct McConfig {
  long paths = 1000;
  std::uint64_t seed = 1;
};

struct TreeConfig {
  int depth = 3;
  int branching = 8;
  int budget_exponent = 1;
  double retirement_floor = 0.5;
  double mart_tol = 1e-10;
};

struct BesselConfig {
  double dimension = 2.0;
  double c = 1.0;
  double big_c = 1.0;
  double eps = 1.0;
  double tol_cmp = 1e-6;
};

struct ProbeConfig {
  int t_index = 0;
  double eta_tube = 0.05;
  double ramp_scale = 0.5;  // endpoint of the linear target, as a multiple of eps0
};

struct OutputConfig {
  std::string dir = "out";
  bool csv = true;
  bool json = true;
  long csv_max_paths = 16;
  int csv_stride = 1;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kSimulate;
  ModelConfig model;
  GridConfig grid;
  McConfig mc;
  TreeConfig tree;
  BesselConfig bessel;
  ProbeConfig probe;
  OutputConfig output;
};

/// Parses the sectioned key = value format; throws std::invalid_argument with
/// a one-line message on malformed input.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Full precondition sweep without touching a simulator; every violated
/// constraint produces one line.
std::vector<std::string> validate(const ExperimentConfig& config);

std::string kind_name(ExperimentKind kind);

}  // namespace divmkt::cli
