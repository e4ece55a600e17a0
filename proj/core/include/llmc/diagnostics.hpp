#ifndef LLMC_DIAGNOSTICS_HPP
#define LLMC_DIAGNOSTICS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "llmc/drift.hpp"
#include "llmc/sampler.hpp"
#include "llmc/target_density.hpp"

namespace llmc {

/// sup_x |F_N(x) - F(x)| evaluated at the sorted samples.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);
double ks_distance(std::span<const double> samples, const TargetDensity& target);

/// Quantile of the one-sample KS statistic for sample size n, from the
/// Kolmogorov limit law with Stephens' finite-n correction.
double ks_critical_value(double p, std::size_t n);

struct TailRow {
  double threshold = 0.0;
  double empirical = 0.0;
  double target = 0.0;
  double ratio = 0.0;  // empirical / target
};

std::vector<TailRow> tail_coverage(std::span<const double> samples, const TargetDensity& target,
                                   std::span<const double> thresholds);

struct HillResult {
  double index = 0.0;
  double std_error = 0.0;
  std::size_t k = 0;
  /// false when the estimate is above 4, i.e. no sign of a power tail.
  bool heavy = true;
};

/// Hill estimator over the top k order statistics. k = 0 uses floor(sqrt(N)).
/// Requires 10 <= k < N and positive samples.
HillResult hill_estimator(std::span<const double> samples, std::size_t k = 0);

/// (1 - ((x - center) / radius)^2)^3 on [center - radius, center + radius].
struct Bump {
  double center = 1.0;
  double radius = 0.5;

  double value(double x) const noexcept;
  double derivative(double x) const noexcept;
  std::string id() const;
};

struct ResidualResult {
  std::string id;
  double value = 0.0;
  double error = 0.0;
};

/// int [s phi f' + int (f(x + z) - f(x)) f_mu(z) dz] pi(x) dx for the bump f,
/// with the drift scaled by `drift_scale`. Vanishes for s = 1.
ResidualResult generator_residual(const DriftField& field, const Bump& bump, double drift_scale = 1.0);

std::vector<Bump> default_bumps();

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::vector<double> density;
  std::size_t in_range = 0;
  bool log_scale = false;
};

/// Density-normalized histogram over [lo, hi]; lo = hi = 0 uses the sample
/// range. Densities integrate to 1 over the binned range.
Histogram histogram(std::span<const double> samples, std::size_t bins, bool log_scale, double lo = 0.0,
                    double hi = 0.0);

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
  std::size_t bins = 0;
};

/// Goodness of fit of counts to Poisson(mean). Bins are merged until each
/// expects at least 5 observations; the last bin collects the upper tail.
ChiSquareResult poisson_chi_square(std::span<const std::uint32_t> counts, double mean);

struct DiagnosticsOptions {
  std::vector<double> thresholds = {5.0, 10.0, 20.0, 50.0, 100.0};
  std::size_t hill_k = 0;
  std::size_t bins = 60;
  bool log_scale = false;
  double hist_lo = 0.0;
  double hist_hi = 0.0;
  std::vector<Bump> bumps = default_bumps();
  double ks_gate = 0.05;
  double residual_gate = 1e-4;
  double chi_square_alpha = 0.01;
};

struct DiagnosticsReport {
  std::size_t n = 0;
  double ks = 0.0;
  double ks_critical_99 = 0.0;
  std::vector<TailRow> tail;
  HillResult hill;
  bool hill_available = false;
  std::vector<ResidualResult> residuals;
  Histogram histogram;
  ChiSquareResult jump_counts;
  std::size_t clamp_events = 0;
  std::size_t skeleton_violations = 0;
  std::vector<std::pair<std::string, bool>> flags;

  bool all_pass() const;
  std::string to_text() const;
  /// One "key=value" per line.
  std::string to_kv() const;
};

DiagnosticsReport diagnose(const SampleSet& samples, const DriftField& field, const DiagnosticsOptions& opts = {});

}  // namespace llmc

#endif  // LLMC_DIAGNOSTICS_HPP
