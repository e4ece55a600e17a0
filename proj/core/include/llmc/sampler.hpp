#ifndef LLMC_SAMPLER_HPP
#define LLMC_SAMPLER_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "llmc/drift.hpp"

namespace llmc {

enum class RecordMode { terminal_only, full_path };

std::string_view to_string(RecordMode mode) noexcept;
RecordMode parse_record_mode(std::string_view text);

struct FlowTolerances {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double x_floor = 1e-12;
  std::size_t max_steps = 1'000'000;
};

struct SimulationConfig {
  double x0 = 1.0;
  double T = 15.0;
  std::size_t n_paths = 30000;
  std::uint64_t master_seed = 20240229;
  double ode_rel_tol = 1e-8;
  double ode_abs_tol = 1e-10;
  double x_floor = 1e-12;
  RecordMode record_mode = RecordMode::terminal_only;
  /// 0 picks the hardware concurrency. Results do not depend on it.
  unsigned workers = 0;

  void validate() const;
  FlowTolerances tolerances() const { return {ode_rel_tol, ode_abs_tol, x_floor}; }
};

struct SkeletonPoint {
  double t = 0.0;
  double x = 0.0;
};

struct Path {
  std::vector<double> jump_times;
  std::vector<double> jump_sizes;
  double terminal = 0.0;
  /// Full-path mode only: accepted ODE states, with the pre- and post-jump
  /// states recorded at each jump time.
  std::vector<SkeletonPoint> skeleton;
  std::size_t clamp_events = 0;
  std::size_t ode_steps = 0;
};

struct SampleSet {
  std::vector<double> terminals;
  std::vector<std::uint32_t> jump_counts;
  std::size_t clamp_events = 0;
  std::size_t skeleton_violations = 0;
  std::size_t ode_steps = 0;
  SimulationConfig config;
  double wall_seconds = 0.0;
  unsigned workers_used = 1;
  /// Full-path mode only, in path_index order.
  std::vector<Path> paths;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FlowStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t clamp_events = 0;
  std::size_t breakpoint_crossings = 0;
};

/// Solves du/dt = phi(u), u(0) = x with Dormand-Prince 5(4) steps. A step
/// never carries the state across a breakpoint of pi: the crossing is
/// located by bisection on the step length and integration restarts on the
/// lower segment. One integrator per thread.
class FlowIntegrator {
 public:
  FlowIntegrator(const DriftField& field, FlowTolerances tol);

  /// u(x, dt). When `skeleton` is given, appends (t0 + s, u) after every
  /// accepted step.
  double advance(double x, double dt, std::vector<SkeletonPoint>* skeleton = nullptr, double t0 = 0.0);
  const FlowStats& stats() const noexcept { return stats_; }

 private:
  double rk_step(std::size_t piece, double y, double k1, double h, double& err, double& k_last);

  const DriftField* field_;
  DriftField::Evaluator eval_;
  FlowTolerances tol_;
  FlowStats stats_;
};

double flow(const DriftField& field, double x, double dt, const FlowTolerances& tol = {}, FlowStats* stats = nullptr);

Path simulate_path(const DriftField& field, const SimulationConfig& cfg, std::size_t path_index);

SampleSet simulate_ensemble(const DriftField& field, const SimulationConfig& cfg);

/// Counts skeleton points that break the path structure: time going
/// backwards, non-positive states, states that do not strictly decrease
/// between jumps, or jumps whose increment is not the recorded size.
std::size_t validate_path(const Path& path);

struct TruncationRow {
  int level = 0;
  double max_sup = 0.0;   // max over paths of sup_t |X^n_t - X_t|
  double mean_sup = 0.0;  // mean over paths
};

struct TruncationTable {
  std::vector<TruncationRow> rows;
  std::size_t n_paths = 0;
  std::size_t grid_points = 0;
};

/// Couples X with X^n for each level: same jump times, same draws xi_k,
/// X^n jumps by max(xi_k, 1/n) and follows the drift of mu_n. The sup is
/// taken over a uniform time grid plus the pre- and post-jump states.
/// Level 0 is the untruncated process itself.
TruncationTable simulate_coupled_truncation(const DriftField& field, const SimulationConfig& cfg,
                                            std::span<const int> levels, std::size_t grid_points = 1000);

}  // namespace llmc

#endif  // LLMC_SAMPLER_HPP
