#pragma once

#include <optional>
#include <string>

#include "config.hpp"

namespace divmkt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitCertificateFailed = 4;

/// Runs one experiment end to end and writes results.csv / summary.json
/// (and certificate.txt for cps runs) into the output directory. Outputs are
/// written atomically and are byte-identical for identical (config, seed).
/// Returns a process exit code; the error string is set when nonzero.
int run_experiment(ExperimentConfig config,
                   const std::optional<std::uint64_t>& seed_override,
                   const std::optional<std::string>& out_override,
                   std::string* error);

}  // namespace divmkt::cli
