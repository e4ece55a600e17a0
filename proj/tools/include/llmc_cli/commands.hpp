#ifndef LLMC_CLI_COMMANDS_HPP
#define LLMC_CLI_COMMANDS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "llmc_cli/config.hpp"

namespace llmc::cli {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_usage = 2, exit_inconclusive = 3 };

struct CommandOptions {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::ostream* log = nullptr;
};

/// Artifact name -> content. Commands build everything in memory and only
/// then write, so a failing run leaves the output directory untouched.
using Artifacts = std::map<std::string, std::string>;

/// Applies --seed / --workers on top of a loaded config.
RunConfig apply_overrides(RunConfig cfg, const CommandOptions& opts);

Artifacts sample_artifacts(const RunConfig& cfg, std::ostream* log = nullptr);
Artifacts check_artifacts(const RunConfig& cfg, int& exit_code);
Artifacts truncation_artifacts(const RunConfig& cfg, std::ostream* log = nullptr);

/// samples.csv content: path_index,terminal,jump_count with round-trip doubles.
std::string samples_csv(const SampleSet& samples);

void write_artifacts(const Artifacts& files, const std::string& out_dir);

/// Full commands: load/validate, compute, write. Errors go to `err`.
int cmd_sample(const std::string& config_path, const CommandOptions& opts, std::ostream& err);
int cmd_example(int id, const std::string& noise, const CommandOptions& opts, std::ostream& err);
int cmd_check(const std::string& config_path, const CommandOptions& opts, std::ostream& err);
int cmd_truncation(const std::string& config_path, const std::optional<std::vector<int>>& levels,
                   const CommandOptions& opts, std::ostream& err);

}  // namespace llmc::cli

#endif  // LLMC_CLI_COMMANDS_HPP
