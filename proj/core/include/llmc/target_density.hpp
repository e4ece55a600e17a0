#ifndef LLMC_TARGET_DENSITY_HPP
#define LLMC_TARGET_DENSITY_HPP

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace llmc {

// Parametric segment shapes. Each shape contributes a part that is scaled by
// the normalizing constant c and, for `Power`, an unscaled additive offset.

/// exp(-rate * x)
struct ExpDecay {
  double rate = 1.0;
};

/// x^exponent, plus `offset` added after scaling by c
struct Power {
  double exponent = 0.0;
  double offset = 0.0;
};

/// base + amplitude * sin(x^power); requires base > |amplitude|
struct SineBand {
  double amplitude = 1.0;
  double base = 1.5;
  double power = 1.5;
};

/// Lognormal density kernel exp(-(ln x - m)^2 / (2 sigma^2)) / (x sigma sqrt(2 pi))
struct LognormalTail {
  double m = 0.0;
  double sigma = 1.0;
};

/// Weibull-type kernel (beta x)^(alpha - 1) exp(-(beta x)^alpha)
struct WeibullTail {
  double alpha = 0.5;
  double beta = 1.0;
};

using SegmentForm = std::variant<ExpDecay, Power, SineBand, LognormalTail, WeibullTail>;

double scaled_value(const SegmentForm& form, double x);
double offset_value(const SegmentForm& form) noexcept;

/// Canonical text form, e.g. "power(-2,0.12)". Round-trips through parse_form.
std::string to_string(const SegmentForm& form);
/// Parses one of exp_decay(r), power(e,o), sine_band(a,b,p),
/// lognormal_tail(m,s), weibull_tail(a,b). Throws std::invalid_argument.
SegmentForm parse_form(std::string_view text);

struct Segment {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  SegmentForm form;
};

/// Result of the near-zero mass check: sup over a grid near 0 of
/// F(x) / (x pi(x)). A bounded value supports the no-drift-onto-zero
/// assumption; the check only warns.
struct NearZeroCheck {
  double sup_ratio = 0.0;
  bool bounded = true;
  std::string message;
};

/// Piecewise density on (0, inf). Immutable after build; safe for
/// concurrent reads.
class TargetDensity {
 public:
  /// Validates that the segments tile (0, inf), computes the normalizing
  /// constant and precomputes cumulative masses. Throws std::invalid_argument
  /// on gaps, overlaps, non-positive evaluators or divergent mass.
  static TargetDensity build(std::vector<Segment> segments, std::string name = "custom");

  /// Built-in example densities "f1".."f4".
  static TargetDensity builtin(std::string_view name);
  static std::vector<std::string> builtin_names();

  const std::string& name() const noexcept { return name_; }
  double norm_const() const noexcept { return norm_const_; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  /// Interior breakpoints, sorted.
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }

  /// Density at x > 0. At a breakpoint returns the right limit.
  double pdf(double x) const;
  /// Evaluator of segment `index` continued analytically to any x > 0.
  double pdf_on_segment(std::size_t index, double x) const;
  /// Widest panel that keeps an oscillating segment below half a local
  /// wavelength; 0 for non-oscillating segments.
  double panel_width(std::size_t index) const;
  /// Index of the segment with lower <= x < upper.
  std::size_t segment_index(double x) const;
  /// Index of the segment with lower < x <= upper (left-limit convention).
  std::size_t segment_index_left(double x) const;

  double cdf(double x) const;
  double tail(double x) const;
  /// Inverse of cdf for p in [0, 1).
  double quantile(double p) const;

  NearZeroCheck check_near_zero(double x_min = 1e-6, double x_max = 1e-2,
                                double bound = 10.0) const;

 private:
  struct NodeTable {
    std::vector<double> x;     // nodes, x.front() == lower
    std::vector<double> mass;  // bounded: mass of [lower, x_k]; unbounded: mass of [x_k, inf)
  };

  TargetDensity() = default;
  void build_tables();
  double segment_integral(std::size_t index, double a, double b) const;
  double segment_tail_integral(std::size_t index, double a) const;
  double cdf_within(std::size_t index, double x) const;
  double tail_within(std::size_t index, double x) const;

  std::string name_;
  std::vector<Segment> segments_;
  std::vector<double> breakpoints_;
  double norm_const_ = 1.0;
  std::vector<double> mass_before_;  // cumulative mass of segments [0, i)
  std::vector<double> segment_mass_;
  double total_mass_ = 1.0;  // sum of segment_mass_, divides every cdf/tail
  std::vector<NodeTable> tables_;
};

}  // namespace llmc

#endif  // LLMC_TARGET_DENSITY_HPP
