#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "llmc/target_density.hpp"

using namespace llmc;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// c for f3 from the antiderivatives; the 0.12 offset is added unscaled.
double f3_constant() {
  const double scaled = 2.0 * (1.0 - std::exp(-2.5)) + (1.0 / 5 - 1.0 / 7) + 1.0 / 7;
  return (1.0 - 0.12 * 2.0) / scaled;
}

// Boost adaptive Gauss-Kronrod on each segment; shares no code with the
// library's own quadrature.
double boost_mass(const TargetDensity& t) {
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  for (std::size_t i = 0; i < t.segments().size(); ++i) {
    const auto& s = t.segments()[i];
    auto f = [&](double x) { return x > 0.0 ? t.pdf_on_segment(i, x) : 0.0; };
    if (std::isinf(s.upper)) {
      total += gauss_kronrod<double, 61>::integrate(f, s.lower, kInf, 20, 1e-13);
    } else {
      const int panels = 64;
      const double w = (s.upper - s.lower) / panels;
      for (int k = 0; k < panels; ++k) {
        total += gauss_kronrod<double, 61>::integrate(f, s.lower + k * w, s.lower + (k + 1) * w, 20, 1e-13);
      }
    }
  }
  return total;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
  return xs;
}

}  // namespace

TEST(TargetDensity, ExponentialIsAlreadyNormalized) {
  const auto t = TargetDensity::build({{0.0, kInf, ExpDecay{1.0}}});
  EXPECT_NEAR(t.norm_const(), 1.0, 1e-10);
  EXPECT_NEAR(t.cdf(1.0), 1.0 - std::exp(-1.0), 1e-8);
}

TEST(TargetDensity, F3ConstantMatchesClosedForm) {
  const auto t = TargetDensity::builtin("f3");
  EXPECT_NEAR(t.norm_const(), f3_constant(), 1e-9);
  EXPECT_NEAR(t.pdf(10.0), t.norm_const() * 0.01, 1e-12);
}

TEST(TargetDensity, F2ConstantMatchesClosedForm) {
  const auto t = TargetDensity::builtin("f2");
  const boost::math::normal z;
  const double logn = boost::math::cdf(boost::math::complement(z, std::log(7.0) / std::sqrt(2.0)));
  const double c = 0.76 / (2.0 * (1.0 - std::exp(-2.5)) + (1.0 / 5 - 1.0 / 7) + logn);
  EXPECT_NEAR(t.norm_const(), c, 1e-9);
}

TEST(TargetDensity, F3JumpAtFiveUsesRightLimit) {
  const auto t = TargetDensity::builtin("f3");
  const double c = t.norm_const();
  const double left = c * std::exp(-2.5);
  const double right = c / 25.0 + 0.12;
  EXPECT_NEAR(t.pdf(5.0 - 1e-12), left, 1e-9);
  EXPECT_NEAR(t.pdf(5.0), right, 1e-12);
  EXPECT_GT(std::abs(right - left), 0.05);
}

TEST(TargetDensity, F3TailIsPowerTail) {
  const auto t = TargetDensity::builtin("f3");
  EXPECT_NEAR(t.tail(20.0), t.norm_const() / 20.0, 1e-10);
  EXPECT_NEAR(t.tail(1e4), t.norm_const() / 1e4, 1e-12);
}

TEST(TargetDensity, RejectsGapsOverlapsAndDivergence) {
  EXPECT_THROW(TargetDensity::build({{1.0, kInf, ExpDecay{1.0}}}), std::invalid_argument);
  EXPECT_THROW(TargetDensity::build({{0.0, 2.0, ExpDecay{1.0}}, {1.0, kInf, ExpDecay{1.0}}}), std::invalid_argument);
  EXPECT_THROW(TargetDensity::build({{0.0, 1.0, ExpDecay{1.0}}, {2.0, kInf, ExpDecay{1.0}}}), std::invalid_argument);
  EXPECT_THROW(TargetDensity::build({{0.0, 1.0, ExpDecay{1.0}}, {1.0, kInf, Power{-1.0, 0.0}}}),
               std::invalid_argument);
  EXPECT_THROW(TargetDensity::builtin("f9"), std::invalid_argument);
}

TEST(TargetDensity, UniformPieceEvaluates) {
  const auto t = TargetDensity::build({{0.0, 1.0, Power{0.0, 0.0}}, {1.0, kInf, Power{-3.0, 0.0}}});
  // mass 1 + 1/2 before scaling
  EXPECT_NEAR(t.pdf(0.5), 1.0 / 1.5, 1e-12);
}

TEST(TargetDensity, DomainErrors) {
  const auto t = TargetDensity::builtin("f3");
  EXPECT_THROW(t.pdf(0.0), std::domain_error);
  EXPECT_THROW(t.cdf(-1.0), std::domain_error);
}

class Builtins : public ::testing::TestWithParam<const char*> {};

TEST_P(Builtins, NormalizedUnderIndependentQuadrature) {
  const auto t = TargetDensity::builtin(GetParam());
  EXPECT_NEAR(boost_mass(t), 1.0, 1e-6);
}

TEST_P(Builtins, CdfAndTailAreConsistentAndMonotone) {
  const auto t = TargetDensity::builtin(GetParam());
  double prev = 0.0;
  for (double x : log_grid(1e-3, 1e4, 400)) {
    const double F = t.cdf(x);
    EXPECT_NEAR(F + t.tail(x), 1.0, 1e-8) << x;
    EXPECT_GE(F, prev) << x;
    prev = F;
  }
  EXPECT_LT(t.cdf(1e-8), 1e-6);
  EXPECT_LT(t.tail(1e8), 1e-6);
}

TEST_P(Builtins, PdfFiniteAndLipschitzInsideSegments) {
  const auto t = TargetDensity::builtin(GetParam());
  for (double x : log_grid(1e-3, 1e4, 2000)) {
    const double p = t.pdf(x);
    ASSERT_TRUE(std::isfinite(p) && p > 0.0) << x;
    const double h = 1e-7 * x;
    if (t.segment_index(x - h) == t.segment_index(x + h)) {
      const double slope = std::abs(t.pdf(x + h) - t.pdf(x - h)) / (2 * h);
      EXPECT_LT(slope, 1e3) << x;
    }
  }
}

TEST_P(Builtins, QuantileInvertsCdf) {
  const auto t = TargetDensity::builtin(GetParam());
  for (double p : {1e-6, 0.01, 0.2, 0.5, 0.8, 0.99, 0.999}) {
    EXPECT_NEAR(t.cdf(t.quantile(p)), p, 1e-9) << p;
  }
}

TEST_P(Builtins, NearZeroMassIsBounded) {
  const auto t = TargetDensity::builtin(GetParam());
  EXPECT_TRUE(t.check_near_zero().bounded);
}

INSTANTIATE_TEST_SUITE_P(All, Builtins, ::testing::Values("f1", "f2", "f3", "f4"));

TEST(SegmentForm, TextRoundTrip) {
  for (const char* s : {"exp_decay(0.5)", "power(-2,0.12)", "sine_band(1,1.5,1.5)", "lognormal_tail(0,1.5)",
                        "weibull_tail(0.5,2)"}) {
    EXPECT_EQ(to_string(parse_form(s)), s);
  }
  EXPECT_THROW(parse_form("cosh(1)"), std::invalid_argument);
  EXPECT_THROW(parse_form("power(-2"), std::invalid_argument);
}

TEST(TargetDensity, NearZeroCheckWarnsOnSteepSingularity) {
  // F(x) / (x pi(x)) = 1 / 0.15 for x^-0.85 near zero.
  const auto t = TargetDensity::build({{0.0, 1.0, Power{-0.85, 0.0}}, {1.0, kInf, ExpDecay{1.0}}});
  EXPECT_TRUE(t.check_near_zero().bounded);
  const auto check = t.check_near_zero(1e-6, 1e-2, 5.0);
  EXPECT_FALSE(check.bounded);
  EXPECT_NEAR(check.sup_ratio, 1.0 / 0.15, 1e-3);
  EXPECT_FALSE(check.message.empty());
}
