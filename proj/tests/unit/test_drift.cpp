#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "llmc/drift.hpp"
#include "llmc/quadrature.hpp"

using namespace llmc;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

TargetDensity exp_target() { return TargetDensity::build({{0.0, kInf, ExpDecay{1.0}}}, "exp1"); }

// exp(-x) underflows near 745, so the cache stops well below.
DriftOptions exp_options() {
  DriftOptions o;
  o.x_max = 50.0;
  return o;
}

// pi = Exp(1), tail of mu_n = 1 below 1/n and exp(-2 s) above.
double truncated_exp_phi(double x, int n) {
  const double a = 1.0 / n;
  double c = 0.0;
  if (x <= a) {
    c = 1.0 - std::exp(-x);
  } else {
    c = std::exp(-(x - a)) - std::exp(-x) + std::exp(-2 * x) * (std::exp(x - a) - 1.0);
  }
  return -c / std::exp(-x);
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
  return xs;
}

struct Pair {
  const char* target;
  JumpDistribution jump;
};

std::vector<Pair> builtin_pairs() {
  return {{"f1", JumpDistribution::weibull(0.5, 1.0)},
          {"f2", JumpDistribution::lognormal(0.0, 2.0)},
          {"f3", JumpDistribution::lomax(1.0)},
          {"f4", JumpDistribution::lomax(1.0)}};
}

}  // namespace

TEST(ConvolveTail, ExponentialPairClosedForm) {
  const auto t = exp_target();
  const auto j = JumpDistribution::exponential(2.0);
  for (double x : {1e-3, 0.1, 1.0, 4.0, 20.0}) {
    EXPECT_NEAR(convolve_tail(t, j, x), std::exp(-x) - std::exp(-2 * x), 1e-10) << x;
  }
  EXPECT_LT(convolve_tail(t, j, 1e-9), 1e-8);
}

TEST(ConvolveTail, ExhaustedBudgetThrows) {
  const auto t = exp_target();
  auto wild = [](double s) { return 0.5 + 0.5 * std::sin(1.0 / (s + 1e-300)); };
  EXPECT_THROW(convolve_tail(t, wild, 1.0, 1e-14), quad::QuadratureError);
}

TEST(Drift, ExponentialPairMatchesClosedForm) {
  DriftField d(exp_target(), JumpDistribution::exponential(2.0), exp_options());
  EXPECT_NEAR(d.phi(1.0), std::exp(-1.0) - 1.0, 1e-9);
  double worst = 0.0;
  for (double x : log_grid(0.01, 20.0, 5000)) worst = std::max(worst, std::abs(d.phi(x) - (std::exp(-x) - 1.0)));
  EXPECT_LT(worst, 1e-6);
  EXPECT_EQ(d.phi(-1.0), 0.0);
  EXPECT_EQ(d.phi(0.0), 0.0);
  EXPECT_NEAR(d.phi(1e-8), -1e-8, 1e-12);
}

TEST(Drift, NegativeForEveryBuiltinPair) {
  for (const auto& p : builtin_pairs()) {
    DriftField d(TargetDensity::builtin(p.target), p.jump);
    for (double x : log_grid(1e-3, 1e3, 600)) {
      EXPECT_LT(d.phi(x), 0.0) << p.target << " x=" << x;
    }
  }
}

TEST(Drift, CacheEqualsExactAtNodes) {
  DriftField d(TargetDensity::builtin("f3"), JumpDistribution::lomax(1.0));
  for (int k = -128; k <= 192; k += 7) {
    const double x = std::pow(10.0, k / 64.0);
    const double exact = d.phi_exact(x);
    EXPECT_NEAR(d.phi(x), exact, 1e-13 * std::abs(exact) + 1e-16) << x;
  }
}

TEST(Drift, CacheFidelityOnRandomProbes) {
  struct Case {
    const char* target;
    JumpDistribution jump;
    int probes;
  };
  const std::vector<Case> cases = {{"f3", JumpDistribution::lomax(1.0), 10000},
                                   {"f2", JumpDistribution::lognormal(0.0, 2.0), 4000},
                                   {"f1", JumpDistribution::weibull(0.5, 1.0), 2000}};
  for (const auto& c : cases) {
    DriftField d(TargetDensity::builtin(c.target), c.jump);
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(std::log(1e-4), std::log(1e3));
    double worst_ratio = 0.0;
    for (int i = 0; i < c.probes; ++i) {
      const double x = std::exp(u(gen));
      const double exact = d.phi_exact(x);
      worst_ratio = std::max(worst_ratio, std::abs(d.phi(x) - exact) / d.tolerance(exact));
    }
    EXPECT_LT(worst_ratio, 10.0) << c.target;
    EXPECT_EQ(d.stats().exact_cells, 0u) << c.target;
  }
}

TEST(Drift, ExtendsBeyondInitialRange) {
  DriftOptions o;
  o.x_max = 10.0;
  DriftField d(TargetDensity::builtin("f3"), JumpDistribution::lomax(1.0), o);
  EXPECT_LT(d.stats().x_hi, 200.0);
  const double v = d.phi(500.0);
  const double exact = d.phi_exact(500.0);
  EXPECT_NEAR(v, exact, 10 * d.tolerance(exact));
  EXPECT_GE(d.stats().x_hi, 500.0);
}

TEST(Drift, BelowSmallestNodeIsExact) {
  DriftField d(TargetDensity::builtin("f3"), JumpDistribution::lomax(1.0));
  const auto before = d.stats().exact_evaluations;
  const double v = d.phi(1e-8);
  EXPECT_EQ(v, d.phi_exact(1e-8));
  EXPECT_GT(d.stats().exact_evaluations, before);
}

TEST(Drift, TruncatedExponentialPairClosedForm) {
  DriftOptions o = exp_options();
  o.truncation = 10;
  DriftField d(exp_target(), JumpDistribution::exponential(2.0), o);
  for (double x : {0.01, 0.05, 0.1, 0.2, 1.0, 3.0, 10.0}) {
    EXPECT_NEAR(d.phi_exact(x), truncated_exp_phi(x, 10), 1e-8) << x;
    EXPECT_NEAR(d.phi(x), truncated_exp_phi(x, 10), 1e-8) << x;
  }
}

TEST(Drift, TruncationLevelZeroIsInactive) {
  DriftField plain(TargetDensity::builtin("f3"), JumpDistribution::lomax(1.0));
  DriftOptions o;
  o.truncation = 0;
  DriftField same(TargetDensity::builtin("f3"), JumpDistribution::lomax(1.0), o);
  for (double x : {0.3, 5.0, 7.5, 40.0}) EXPECT_EQ(plain.phi(x), same.phi(x));
}

TEST(Drift, TruncatedDriftsAreOrderedAndConverge) {
  const auto target = TargetDensity::builtin("f3");
  const auto jump = JumpDistribution::lomax(1.0);
  DriftField full(target, jump);
  const std::vector<int> levels = {1, 2, 8, 32, 128, 1024};
  std::vector<std::unique_ptr<DriftField>> fields;
  for (int n : levels) {
    DriftOptions o;
    o.truncation = n;
    fields.push_back(std::make_unique<DriftField>(target, jump, o));
  }
  for (double x : log_grid(1e-2, 100.0, 60)) {
    const double phi = full.phi_exact(x);
    double prev = -kInf;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const double pn = fields[i]->phi_exact(x);
      EXPECT_LE(pn, phi + 1e-9) << "n=" << levels[i] << " x=" << x;
      EXPECT_GE(pn, prev - 1e-9) << "n=" << levels[i] << " x=" << x;
      prev = pn;
      // |phi_n - phi| <= mu((0, 1/n)) F_pi(x) / pi(x)
      const double bound = jump.cdf(1.0 / levels[i]) * target.cdf(x) / target.pdf(x);
      EXPECT_LE(std::abs(pn - phi), bound + 1e-8) << "n=" << levels[i] << " x=" << x;
    }
    EXPECT_LT(std::abs(fields.back()->phi_exact(x) - phi), 2e-3 * (1 + target.cdf(x) / target.pdf(x)));
  }
}

TEST(Drift, OptionValidation) {
  DriftOptions o;
  o.exact_tol = 0.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  DriftOptions p;
  p.cache_nodes_per_decade = 1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  DriftOptions q;
  q.truncation = -1;
  EXPECT_THROW(q.validate(), std::invalid_argument);
}
