#ifndef LLMC_CLI_CONFIG_HPP
#define LLMC_CLI_CONFIG_HPP

#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "llmc/conditions.hpp"
#include "llmc/diagnostics.hpp"
#include "llmc/drift.hpp"
#include "llmc/jump_distribution.hpp"
#include "llmc/sampler.hpp"
#include "llmc/target_density.hpp"

namespace llmc::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TargetSpec {
  /// f1..f4; empty when `segments` is used.
  std::string builtin = "f3";
  std::vector<Segment> segments;

  TargetDensity build() const;
};

struct JumpSpec {
  std::string family = "lomax";
  double alpha = 1.0;
  double beta = 1.0;
  double m = 0.0;
  double sigma = 2.0;
  double rate = 1.0;

  JumpDistribution build() const;
};

struct OutputSpec {
  std::size_t bins = 60;
  bool log_bins = false;
  double hist_lo = 0.0;
  double hist_hi = 30.0;
  bool svg = true;
  bool drift_csv = false;
};

struct TruncationSpec {
  std::vector<int> levels = {2, 8, 32, 128};
  std::size_t grid_points = 1000;
};

struct RunConfig {
  TargetSpec target;
  JumpSpec jump;
  DriftOptions drift;
  SimulationConfig sim;
  OutputSpec output;
  DiagnosticsOptions diagnostics;
  GridSpec check;
  TruncationSpec truncation;
  /// Free-text lines echoed as comments at the top of the config.
  std::vector<std::string> notes;

  /// Builds every component once to surface bad values with the key name.
  void validate() const;
};

/// INI text with sections [target] [jump] [drift] [sim] [output]
/// [diagnostics] [check] [truncation]. Missing keys keep their defaults;
/// unknown sections or keys are rejected.
RunConfig parse_config(std::istream& in, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

/// Full config with every key, readable by parse_config.
std::string to_ini(const RunConfig& cfg);

/// Preset for example id 1..4 with the matched heavy-tailed jump law or the
/// exponential baseline.
RunConfig example_config(int id, bool exponential_noise);

std::string format_segments(const std::vector<Segment>& segments);
std::vector<Segment> parse_segments(const std::string& text);

}  // namespace llmc::cli

#endif  // LLMC_CLI_CONFIG_HPP
