#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace divmkt::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

using Sections = std::map<std::string, std::map<std::string, std::string>>;

Sections tokenize(const std::string& text) {
  Sections out;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || section.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value' inside a section");
    out[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

class SectionReader {
 public:
  SectionReader(const Sections& s, std::string name) : name_(std::move(name)) {
    const auto it = s.find(name_);
    if (it != s.end()) kv_ = &it->second;
  }

  std::optional<std::string> raw(const std::string& key) const {
    if (!kv_) return std::nullopt;
    const auto it = kv_->find(key);
    if (it == kv_->end()) return std::nullopt;
    return it->second;
  }

  double number(const std::string& key, double fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    std::size_t used = 0;
    const double x = std::stod(*v, &used);
    if (used != v->size())
      throw std::invalid_argument("config [" + name_ + "] " + key +
                                  ": not a number: " + *v);
    return x;
  }

  long integer(const std::string& key, long fallback) const {
    const double x = number(key, static_cast<double>(fallback));
    const long r = static_cast<long>(std::llround(x));
    if (std::abs(x - r) > 1e-9)
      throw std::invalid_argument("config [" + name_ + "] " + key +
                                  ": expected an integer");
    return r;
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    const auto v = raw(key);
    return v ? *v : fallback;
  }

  Eigen::VectorXd vector(const std::string& key) const {
    const auto v = raw(key);
    if (!v) return Eigen::VectorXd();
    std::vector<double> vals;
    std::string item;
    std::istringstream in(*v);
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      vals.push_back(std::stod(item));
    }
    Eigen::VectorXd out(static_cast<int>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i)
      out[static_cast<int>(i)] = vals[i];
    return out;
  }

 private:
  std::string name_;
  const std::map<std::string, std::string>* kv_ = nullptr;
};

}  // namespace

std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kSimulate: return "simulate";
    case ExperimentKind::kDiversity: return "diversity";
    case ExperimentKind::kConditioned: return "conditioned";
    case ExperimentKind::kCps: return "cps";
    case ExperimentKind::kBessel: return "bessel";
    case ExperimentKind::kCfsProbe: return "cfs-probe";
  }
  return "?";
}

ExperimentConfig parse_config_text(const std::string& text) {
  const Sections sections = tokenize(text);
  ExperimentConfig cfg;

  const SectionReader exp(sections, "experiment");
  const std::string kind = exp.text("kind", "simulate");
  if (kind == "simulate") cfg.kind = ExperimentKind::kSimulate;
  else if (kind == "diversity") cfg.kind = ExperimentKind::kDiversity;
  else if (kind == "conditioned") cfg.kind = ExperimentKind::kConditioned;
  else if (kind == "cps") cfg.kind = ExperimentKind::kCps;
  else if (kind == "bessel") cfg.kind = ExperimentKind::kBessel;
  else if (kind == "cfs-probe") cfg.kind = ExperimentKind::kCfsProbe;
  else throw std::invalid_argument("config [experiment] kind: unknown '" + kind + "'");

  const SectionReader model(sections, "model");
  const std::string mtype = model.text("type", "constant");
  if (mtype == "fernholz") cfg.model.kind = ModelKind::kFernholz;
  else if (mtype == "arctan") cfg.model.kind = ModelKind::kArctan;
  else if (mtype == "conditioned") cfg.model.kind = ModelKind::kConditioned;
  else if (mtype == "constant") cfg.model.kind = ModelKind::kConstantVol;
  else throw std::invalid_argument("config [model] type: unknown '" + mtype + "'");

  cfg.model.g = model.vector("g");
  cfg.model.s0 = model.vector("s0");
  cfg.model.assets = static_cast<int>(model.integer(
      "assets", cfg.model.g.size() > 0   ? cfg.model.g.size()
                : cfg.model.s0.size() > 0 ? cfg.model.s0.size()
                                          : 2));
  cfg.model.drivers = static_cast<int>(model.integer("drivers", cfg.model.assets));
  cfg.model.sigma = model.number("sigma", 0.2);
  cfg.model.delta = model.number("delta", 0.2);
  cfg.model.eta = model.number("eta", 0.1);
  cfg.model.big_m = model.number("big_m", 1.0);
  cfg.model.gamma_cap = model.number("gamma_cap", 1e3);
  if (cfg.model.kind == ModelKind::kArctan) {
    cfg.model.assets = 2;
    cfg.model.drivers = 2;
  }
  if (cfg.model.s0.size() == 0)
    cfg.model.s0 = Eigen::VectorXd::Ones(cfg.model.assets);

  const SectionReader grid(sections, "grid");
  cfg.grid.horizon = grid.number("T", 1.0);
  cfg.grid.steps = static_cast<int>(grid.integer("N", 4096));

  const SectionReader mc(sections, "mc");
  cfg.mc.paths = mc.integer("paths", 1000);
  cfg.mc.seed = static_cast<std::uint64_t>(mc.integer("seed", 1));

  const SectionReader tree(sections, "tree");
  cfg.tree.depth = static_cast<int>(tree.integer("depth", 3));
  cfg.tree.branching = static_cast<int>(tree.integer("branching", 8));
  cfg.tree.budget_exponent = static_cast<int>(tree.integer("budget_exponent", 1));
  cfg.tree.retirement_floor = tree.number("retirement_floor", 0.5);
  cfg.tree.mart_tol = tree.number("mart_tol", 1e-10);

  const SectionReader bessel(sections, "bessel");
  cfg.bessel.dimension = bessel.number("dimension", 2.0);
  cfg.bessel.c = bessel.number("c", 1.0);
  cfg.bessel.big_c = bessel.number("C", 1.0);
  cfg.bessel.eps = bessel.number("eps", 1.0);
  cfg.bessel.tol_cmp = bessel.number("tol_cmp", 1e-6);

  const SectionReader probe(sections, "probe");
  cfg.probe.t_index = static_cast<int>(probe.integer("t_index", 0));
  cfg.probe.eta_tube = probe.number("eta_tube", 0.05);
  cfg.probe.ramp_scale = probe.number("ramp_scale", 0.5);

  const SectionReader output(sections, "output");
  cfg.output.dir = output.text("dir", "out");
  const std::string formats = output.text("formats", "csv,json");
  cfg.output.csv = formats.find("csv") != std::string::npos;
  cfg.output.json = formats.find("json") != std::string::npos;
  cfg.output.csv_max_paths = output.integer("csv_max_paths", 16);
  cfg.output.csv_stride = static_cast<int>(output.integer("csv_stride", 1));
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
  std::vector<std::string> v;
  const int n = cfg.model.assets;
  if (n < 1) v.push_back("model.assets must be >= 1");
  if (cfg.model.drivers < 1) v.push_back("model.drivers must be >= 1");
  if (!(cfg.grid.horizon > 0.0)) v.push_back("grid.T must be positive");
  if (cfg.grid.steps < 1) v.push_back("grid.N must be >= 1");
  if (cfg.mc.paths < 1) v.push_back("mc.paths must be >= 1");
  if (!(cfg.model.delta > 0.0 && cfg.model.delta < 1.0))
    v.push_back("model.delta must lie in (0,1)");
  else if (n >= 1 && !(1.0 - cfg.model.delta > 1.0 / n))
    v.push_back("O(delta) empty: need 1-delta > 1/n");
  if (!(cfg.model.eta > 0.0)) v.push_back("model.eta must be positive");
  if (!(cfg.model.sigma >= 0.0) && cfg.model.kind != ModelKind::kArctan)
    v.push_back("model.sigma must be nonnegative");
  if (cfg.kind == ExperimentKind::kBessel && !(cfg.model.sigma > 0.0))
    v.push_back("bessel experiments need model.sigma > 0");
  if (cfg.model.s0.size() != n) v.push_back("model.s0 dimension mismatch");
  else if (!(cfg.model.s0.minCoeff() > 0.0))
    v.push_back("model.s0 must be strictly positive");

  if (cfg.model.kind == ModelKind::kFernholz) {
    if (cfg.model.g.size() != n) v.push_back("fernholz model needs g with one rate per asset");
    else if (!(cfg.model.g.minCoeff() > 0.0)) v.push_back("model.g must be positive");
    if (!(cfg.model.big_m > 0.0)) v.push_back("model.big_m must be positive");
    if (!(cfg.model.gamma_cap > 0.0)) v.push_back("model.gamma_cap must be positive");
  }

  if (cfg.kind == ExperimentKind::kCps) {
    if (cfg.tree.depth < 1) v.push_back("tree.depth must be >= 1");
    if (cfg.tree.branching < 2) v.push_back("tree.branching must be >= 2");
    if (!(cfg.tree.retirement_floor > 0.0 && cfg.tree.retirement_floor < 1.0))
      v.push_back("tree.retirement_floor must lie in (0,1)");
  }

  if (cfg.kind == ExperimentKind::kBessel) {
    if (!(cfg.bessel.c > 0.0) || !(cfg.bessel.big_c >= cfg.bessel.c))
      v.push_back("bessel needs 0 < c <= C");
    else {
      const double min_dim = cfg.model.drivers * cfg.bessel.big_c / cfg.bessel.c;
      if (cfg.bessel.dimension < min_dim) {
        std::ostringstream os;
        os << "bessel.dimension < d*C/c = " << min_dim;
        v.push_back(os.str());
      }
    }
    if (!(cfg.bessel.eps > 0.0)) v.push_back("bessel.eps must be positive");
  }

  if (cfg.kind == ExperimentKind::kCfsProbe) {
    if (cfg.probe.t_index < 0 || cfg.probe.t_index >= cfg.grid.steps)
      v.push_back("probe.t_index must lie in [0, N)");
    if (!(cfg.probe.eta_tube > 0.0)) v.push_back("probe.eta_tube must be positive");
  }

  if (cfg.output.csv_max_paths < 0) v.push_back("output.csv_max_paths must be >= 0");
  if (cfg.output.csv_stride < 1) v.push_back("output.csv_stride must be >= 1");
  return v;
}

}  // namespace divmkt::cli
