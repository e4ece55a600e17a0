#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "llmc/drift.hpp"
#include "llmc/quadrature.hpp"
#include "llmc/sampler.hpp"

using namespace llmc;

namespace {

const DriftField& f3_field() {
  static const DriftField d(TargetDensity::builtin("f3"), JumpDistribution::lomax(1.0));
  return d;
}

std::vector<double> probes(std::size_t n) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(std::log(1e-3), std::log(1e3));
  std::vector<double> xs(n);
  for (double& x : xs) x = std::exp(u(gen));
  return xs;
}

void BM_PhiCached(benchmark::State& st) {
  const auto& d = f3_field();
  const auto xs = probes(1024);
  std::size_t i = 0;
  for (auto _ : st) benchmark::DoNotOptimize(d.phi(xs[i++ & 1023]));
}
BENCHMARK(BM_PhiCached);

void BM_PhiExact(benchmark::State& st) {
  const auto& d = f3_field();
  const auto xs = probes(1024);
  std::size_t i = 0;
  for (auto _ : st) benchmark::DoNotOptimize(d.phi_exact(xs[i++ & 1023]));
}
BENCHMARK(BM_PhiExact);

void BM_DriftBuild(benchmark::State& st) {
  const auto target = TargetDensity::builtin("f3");
  const auto jump = JumpDistribution::lomax(1.0);
  for (auto _ : st) {
    DriftField d(target, jump);
    benchmark::DoNotOptimize(d.stats().cells);
  }
}
BENCHMARK(BM_DriftBuild)->Unit(benchmark::kMillisecond);

void BM_Flow(benchmark::State& st) {
  const auto& d = f3_field();
  const double dt = static_cast<double>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(flow(d, 12.0, dt));
}
BENCHMARK(BM_Flow)->Arg(1)->Arg(15);

void BM_Path(benchmark::State& st) {
  const auto& d = f3_field();
  SimulationConfig cfg;
  cfg.T = 15.0;
  cfg.n_paths = 1u << 20;
  std::size_t i = 0;
  for (auto _ : st) benchmark::DoNotOptimize(simulate_path(d, cfg, i++).terminal);
}
BENCHMARK(BM_Path)->Unit(benchmark::kMicrosecond);

void BM_QuadratureHalfLine(benchmark::State& st) {
  const auto f = [](double x) { return 1.0 / (1.0 + x * x) * std::exp(-0.1 * x); };
  for (auto _ : st) benchmark::DoNotOptimize(quad::integrate_to_infinity(f, 0.0).value);
}
BENCHMARK(BM_QuadratureHalfLine);

void BM_TargetCdf(benchmark::State& st) {
  const auto t = TargetDensity::builtin("f3");
  const auto xs = probes(1024);
  std::size_t i = 0;
  for (auto _ : st) benchmark::DoNotOptimize(t.cdf(xs[i++ & 1023]));
}
BENCHMARK(BM_TargetCdf);

}  // namespace

BENCHMARK_MAIN();
