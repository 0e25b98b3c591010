#include <CLI11.hpp>
#include <cstdio>
#include <optional>
#include <string>

#include "config.hpp"
#include "runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"divmkt: diverse-market simulation and price-system toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", config_path, "experiment config file")->required();
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt =
      run->add_option("--seed", seed_value, "override the config seed");
  std::string out_value;
  CLI::Option* out_opt =
      run->add_option("--out", out_value, "override the output directory");

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "dry-run precondition sweep");
  std::string validate_path;
  validate_cmd->add_option("--config", validate_path, "experiment config file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate_cmd->parsed()) {
      const auto cfg = divmkt::cli::load_config(validate_path);
      const auto violations = divmkt::cli::validate(cfg);
      if (violations.empty()) {
        std::printf("ok: %s experiment, no violations\n",
                    divmkt::cli::kind_name(cfg.kind).c_str());
      } else {
        for (const auto& v : violations) std::printf("violation: %s\n", v.c_str());
      }
      return 0;
    }

    if (*seed_opt) seed = seed_value;
    if (*out_opt) out_dir = out_value;
    const auto cfg = divmkt::cli::load_config(config_path);
    std::string error;
    const int code = divmkt::cli::run_experiment(cfg, seed, out_dir, &error);
    if (code != 0) std::fprintf(stderr, "error: %s\n", error.c_str());
    return code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: config: %s\n", e.what());
    return divmkt::cli::kExitValidation;
  }
}
