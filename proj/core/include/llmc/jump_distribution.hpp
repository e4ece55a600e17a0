#ifndef LLMC_JUMP_DISTRIBUTION_HPP
#define LLMC_JUMP_DISTRIBUTION_HPP

#include <string>
#include <string_view>

#include "llmc/rng.hpp"

namespace llmc {

enum class JumpFamily { weibull, lognormal, lomax, exponential };

std::string_view to_string(JumpFamily family) noexcept;
JumpFamily parse_jump_family(std::string_view text);

/// Jump-size law of the compound Poisson driver. Immutable; sampling takes an
/// external stream so one instance can be shared across workers.
///
/// Parameterizations:
///   weibull(alpha, beta)   f(x) = alpha beta (beta x)^(alpha-1) exp(-(beta x)^alpha), 0 < alpha < 1
///   lognormal(m, sigma)    f(x) = exp(-(ln x - m)^2 / (2 sigma^2)) / (x sigma sqrt(2 pi))
///   lomax(alpha)           f(x) = alpha / (1 + x)^(1 + alpha)
///   exponential(rate)      f(x) = rate exp(-rate x)
class JumpDistribution {
 public:
  static JumpDistribution weibull(double alpha, double beta);
  static JumpDistribution lognormal(double m, double sigma);
  static JumpDistribution lomax(double alpha);
  static JumpDistribution exponential(double rate);

  JumpFamily family() const noexcept { return family_; }
  /// Shape (weibull, lomax), log-mean m (lognormal) or rate (exponential).
  double first() const noexcept { return p1_; }
  /// Scale beta (weibull) or sigma (lognormal); unused otherwise.
  double second() const noexcept { return p2_; }
  std::string describe() const;

  double pdf(double x) const;
  double cdf(double x) const;
  double tail(double x) const;
  double log_tail(double x) const;
  /// pdf / tail. Returns +inf when the tail underflows to zero.
  double hazard(double x) const;
  /// f'(x) / f(x), closed form per family.
  double log_pdf_derivative(double x) const;
  double quantile(double p) const;
  double mean() const;

  double sample(RngStream& rng) const { return quantile(rng.uniform()); }

 private:
  JumpDistribution(JumpFamily family, double p1, double p2) : family_(family), p1_(p1), p2_(p2) {}

  JumpFamily family_;
  double p1_;
  double p2_;
};

}  // namespace llmc

#endif  // LLMC_JUMP_DISTRIBUTION_HPP
