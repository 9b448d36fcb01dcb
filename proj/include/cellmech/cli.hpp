#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

namespace cellmech::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Fully resolved flat configuration of one subcommand: module defaults,
/// overlaid by the config file, overlaid by explicit flags.
struct CliConfig {
  std::string subcommand;
  nlohmann::json values = nlohmann::json::object();
};

/// Default key/value document for a subcommand ("run", "bench", "verify").
/// For bench, `bench_id` selects the A or B defaults.
nlohmann::json default_values(const std::string& subcommand, const std::string& bench_id = "A");

int cmd_run(const CliConfig& config, std::ostream& out, std::ostream& err);
int cmd_bench(const CliConfig& config, std::ostream& out, std::ostream& err);
int cmd_verify(const CliConfig& config, std::ostream& out, std::ostream& err);

/// Entry point: parses argv, resolves the configuration and dispatches.
/// Returns 0 on success, 1 on failure, 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cellmech::cli
