#ifndef LLMC_CONDITIONS_HPP
#define LLMC_CONDITIONS_HPP

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "llmc/jump_distribution.hpp"
#include "llmc/target_density.hpp"

namespace llmc {

enum class Verdict { pass, fail, inconclusive };

std::string_view to_string(Verdict v) noexcept;

/// Log-spaced evaluation grid. Limits are decided on the top decade
/// [x_max / 10, x_max]; `slack` is the tolerated relative slip per step.
struct GridSpec {
  double x_min = 1e-2;
  double x_max = 1e3;
  int points_per_decade = 20;
  double slack = 0.99;
  /// q(x_max) must fall below this for "hazard tends to zero".
  double hazard_eps = 0.05;
  /// |alpha - rho| below this counts as the boundary case alpha == rho.
  double index_tol = 1e-2;

  void validate() const;
};

struct ConditionResult {
  std::string id;
  std::string description;
  Verdict verdict = Verdict::inconclusive;
  std::string evidence;
  /// (x, value) pairs backing the verdict.
  std::vector<std::pair<double, double>> samples;
};

/// Grid-based evidence for the hypotheses of the two ergodicity results:
/// the hazard-rate route for long-tailed targets and the shifted-Pareto
/// route for regularly varying targets.
struct ConditionReport {
  std::string jump;
  std::string target;
  GridSpec grid;
  std::vector<ConditionResult> conditions;
  Verdict subexponential_route = Verdict::inconclusive;
  Verdict regular_variation_route = Verdict::inconclusive;
  double target_tail_index = 0.0;
  std::vector<std::string> warnings;

  const ConditionResult& find(std::string_view id) const;
  /// pass if some route passes; inconclusive if none passes but one is
  /// inconclusive; fail otherwise.
  Verdict overall() const;

  std::string to_text() const;
  std::string to_json() const;
};

ConditionReport check_theorem_conditions(const JumpDistribution& jump, const TargetDensity& target,
                                         const GridSpec& grid = {});

/// Regular-variation index rho of the target tail estimated from
/// tail(x) / tail(10 x) at the top of the grid.
double estimate_tail_index(const TargetDensity& target, double x);

}  // namespace llmc

#endif  // LLMC_CONDITIONS_HPP
