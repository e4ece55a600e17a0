#include "llmc/jump_distribution.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

#include "llmc/format.hpp"

namespace llmc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonnegative(double x, const char* what) {
  if (!(x >= 0.0)) throw std::domain_error(std::string(what) + ": x must be >= 0, got " + format_double(x));
}

}  // namespace

std::string_view to_string(JumpFamily family) noexcept {
  switch (family) {
    case JumpFamily::weibull: return "weibull";
    case JumpFamily::lognormal: return "lognormal";
    case JumpFamily::lomax: return "lomax";
    case JumpFamily::exponential: return "exponential";
  }
  return "unknown";
}

JumpFamily parse_jump_family(std::string_view text) {
  if (text == "weibull") return JumpFamily::weibull;
  if (text == "lognormal") return JumpFamily::lognormal;
  if (text == "lomax" || text == "pareto") return JumpFamily::lomax;
  if (text == "exponential") return JumpFamily::exponential;
  throw std::invalid_argument("unknown jump family '" + std::string(text) +
                              "' (expected weibull|lognormal|lomax|exponential)");
}

JumpDistribution JumpDistribution::weibull(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("weibull: alpha must lie in (0, 1)");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("weibull: beta must be > 0");
  return {JumpFamily::weibull, alpha, beta};
}

JumpDistribution JumpDistribution::lognormal(double m, double sigma) {
  if (!std::isfinite(m)) throw std::invalid_argument("lognormal: m must be finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("lognormal: sigma must be > 0");
  return {JumpFamily::lognormal, m, sigma};
}

JumpDistribution JumpDistribution::lomax(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("lomax: alpha must be > 0");
  return {JumpFamily::lomax, alpha, 0.0};
}

JumpDistribution JumpDistribution::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("exponential: rate must be > 0");
  return {JumpFamily::exponential, rate, 0.0};
}

std::string JumpDistribution::describe() const {
  switch (family_) {
    case JumpFamily::weibull:
      return "weibull(alpha=" + format_double(p1_) + ",beta=" + format_double(p2_) + ")";
    case JumpFamily::lognormal:
      return "lognormal(m=" + format_double(p1_) + ",sigma=" + format_double(p2_) + ")";
    case JumpFamily::lomax: return "lomax(alpha=" + format_double(p1_) + ")";
    case JumpFamily::exponential: return "exponential(rate=" + format_double(p1_) + ")";
  }
  return "unknown";
}

double JumpDistribution::pdf(double x) const {
  require_nonnegative(x, "pdf");
  switch (family_) {
    case JumpFamily::weibull: {
      if (x == 0.0) return kInf;
      const double bx = p2_ * x;
      return p1_ * p2_ * std::pow(bx, p1_ - 1.0) * std::exp(-std::pow(bx, p1_));
    }
    case JumpFamily::lognormal: {
      if (x == 0.0) return 0.0;
      const double z = (std::log(x) - p1_) / p2_;
      return std::exp(-0.5 * z * z) / (x * p2_ * std::sqrt(2.0 * std::numbers::pi));
    }
    case JumpFamily::lomax: return p1_ * std::exp(-(1.0 + p1_) * std::log1p(x));
    case JumpFamily::exponential: return p1_ * std::exp(-p1_ * x);
  }
  return 0.0;
}

double JumpDistribution::cdf(double x) const {
  require_nonnegative(x, "cdf");
  switch (family_) {
    case JumpFamily::weibull: return -std::expm1(-std::pow(p2_ * x, p1_));
    case JumpFamily::lognormal: {
      if (x == 0.0) return 0.0;
      const double z = (std::log(x) - p1_) / p2_;
      return 0.5 * std::erfc(-z / std::numbers::sqrt2);
    }
    case JumpFamily::lomax: return -std::expm1(-p1_ * std::log1p(x));
    case JumpFamily::exponential: return -std::expm1(-p1_ * x);
  }
  return 0.0;
}

double JumpDistribution::tail(double x) const {
  require_nonnegative(x, "tail");
  if (family_ == JumpFamily::lognormal) {
    if (x == 0.0) return 1.0;
    const double z = (std::log(x) - p1_) / p2_;
    return 0.5 * std::erfc(z / std::numbers::sqrt2);
  }
  return std::exp(log_tail(x));
}

double JumpDistribution::log_tail(double x) const {
  require_nonnegative(x, "log_tail");
  switch (family_) {
    case JumpFamily::weibull: return -std::pow(p2_ * x, p1_);
    case JumpFamily::lognormal: return std::log(tail(x));
    case JumpFamily::lomax: return -p1_ * std::log1p(x);
    case JumpFamily::exponential: return -p1_ * x;
  }
  return 0.0;
}

double JumpDistribution::hazard(double x) const {
  require_nonnegative(x, "hazard");
  switch (family_) {
    case JumpFamily::weibull: {
      if (x == 0.0) return kInf;
      // pdf / tail of the density above; exp(-(beta x)^alpha) cancels.
      return p1_ * p2_ * std::pow(p2_ * x, p1_ - 1.0);
    }
    case JumpFamily::lognormal: {
      const double t = tail(x);
      if (t == 0.0) return kInf;
      return pdf(x) / t;
    }
    case JumpFamily::lomax: return p1_ / (1.0 + x);
    case JumpFamily::exponential: return p1_;
  }
  return 0.0;
}

double JumpDistribution::log_pdf_derivative(double x) const {
  if (!(x > 0.0)) throw std::domain_error("log_pdf_derivative: x must be > 0");
  switch (family_) {
    case JumpFamily::weibull: return (p1_ - 1.0) / x - p1_ * p2_ * std::pow(p2_ * x, p1_ - 1.0);
    case JumpFamily::lognormal: return -(1.0 + (std::log(x) - p1_) / (p2_ * p2_)) / x;
    case JumpFamily::lomax: return -(1.0 + p1_) / (1.0 + x);
    case JumpFamily::exponential: return -p1_;
  }
  return 0.0;
}

double JumpDistribution::quantile(double p) const {
  if (!(p >= 0.0 && p < 1.0)) throw std::domain_error("quantile: p must lie in [0, 1), got " + format_double(p));
  if (p == 0.0) return 0.0;
  const double neg_log_tail = -std::log1p(-p);
  switch (family_) {
    case JumpFamily::weibull: return std::pow(neg_log_tail, 1.0 / p1_) / p2_;
    case JumpFamily::lognormal: {
      const double z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
      return std::exp(p1_ + p2_ * z);
    }
    case JumpFamily::lomax: return std::expm1(neg_log_tail / p1_);
    case JumpFamily::exponential: return neg_log_tail / p1_;
  }
  return 0.0;
}

double JumpDistribution::mean() const {
  switch (family_) {
    case JumpFamily::weibull: return std::tgamma(1.0 + 1.0 / p1_) / p2_;
    case JumpFamily::lognormal: return std::exp(p1_ + 0.5 * p2_ * p2_);
    case JumpFamily::lomax: return p1_ > 1.0 ? 1.0 / (p1_ - 1.0) : kInf;
    case JumpFamily::exponential: return 1.0 / p1_;
  }
  return 0.0;
}

}  // namespace llmc
