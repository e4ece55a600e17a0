#include "llmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/tools/roots.hpp>

#include "llmc/format.hpp"
#include "llmc/quadrature.hpp"

namespace llmc {
namespace {

double kolmogorov_cdf(double k) {
  if (k <= 0.0) return 0.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * k * k);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return 1.0 - 2.0 * sum;
}

}  // namespace

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_distance(std::span<const double> samples, const TargetDensity& target) {
  return ks_distance(samples, [&target](double x) { return x > 0.0 ? target.cdf(x) : 0.0; });
}

double ks_critical_value(double p, std::size_t n) {
  if (!(p > 0.0 && p < 1.0) || n == 0) throw std::invalid_argument("ks_critical_value: need p in (0,1), n > 0");
  boost::math::tools::eps_tolerance<double> tol(50);
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::bisect([p](double k) { return kolmogorov_cdf(k) - p; }, 0.1, 5.0, tol, iters);
  const double k = 0.5 * (r.first + r.second);
  const double sn = std::sqrt(static_cast<double>(n));
  return k / (sn + 0.12 + 0.11 / sn);
}

std::vector<TailRow> tail_coverage(std::span<const double> samples, const TargetDensity& target,
                                   std::span<const double> thresholds) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0)) throw std::invalid_argument("tail_coverage: thresholds must be > 0");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
      throw std::invalid_argument("tail_coverage: thresholds must be increasing");
    }
  }
  std::vector<TailRow> rows;
  const double n = static_cast<double>(samples.size());
  for (double u : thresholds) {
    TailRow r;
    r.threshold = u;
    const auto above = std::count_if(samples.begin(), samples.end(), [u](double x) { return x > u; });
    r.empirical = samples.empty() ? 0.0 : static_cast<double>(above) / n;
    r.target = target.tail(u);
    r.ratio = r.target > 0.0 ? r.empirical / r.target : std::numeric_limits<double>::infinity();
    rows.push_back(r);
  }
  return rows;
}

HillResult hill_estimator(std::span<const double> samples, std::size_t k) {
  const std::size_t n = samples.size();
  if (k == 0) k = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  if (k < 10) throw std::invalid_argument("hill_estimator: k must be >= 10");
  if (k >= n) throw std::invalid_argument("hill_estimator: k must be < N");
  std::vector<double> xs(samples.begin(), samples.end());
  // Top k + 1 order statistics in descending order; ties keep a strict order.
  std::partial_sort(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k + 1), xs.end(), std::greater<>());
  if (!(xs[k] > 0.0)) throw std::invalid_argument("hill_estimator: order statistics must be positive");
  const double log_ref = std::log(xs[k]);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(xs[i]) - log_ref;
  HillResult r;
  r.k = k;
  r.index = sum > 0.0 ? static_cast<double>(k) / sum : std::numeric_limits<double>::infinity();
  r.std_error = r.index / std::sqrt(static_cast<double>(k));
  r.heavy = r.index <= 4.0;
  return r;
}

double Bump::value(double x) const noexcept {
  const double s = (x - center) / radius;
  if (std::abs(s) >= 1.0) return 0.0;
  const double w = 1.0 - s * s;
  return w * w * w;
}

double Bump::derivative(double x) const noexcept {
  const double s = (x - center) / radius;
  if (std::abs(s) >= 1.0) return 0.0;
  const double w = 1.0 - s * s;
  return -6.0 * s * w * w / radius;
}

std::string Bump::id() const { return "bump[" + format_double(center - radius) + "," + format_double(center + radius) + "]"; }

std::vector<Bump> default_bumps() { return {{1.5, 1.0}, {5.0, 2.0}, {11.0, 3.0}}; }

ResidualResult generator_residual(const DriftField& field, const Bump& bump, double drift_scale) {
  if (!(bump.radius > 0.0) || !(bump.center - bump.radius > 0.0)) {
    throw std::invalid_argument("generator_residual: bump support must lie in (0, inf)");
  }
  const TargetDensity& target = field.target();
  const JumpDistribution& jump = field.jump();
  const double lo = bump.center - bump.radius;
  const double hi = bump.center + bump.radius;
  auto evaluator = field.evaluator();

  quad::Options inner;
  inner.abs_tol = 1e-12;
  inner.rel_tol = 1e-10;
  inner.max_intervals = 4000;
  auto jump_part = [&](double x) {
    // int_0^{hi - x} f(x + z) f_mu(z) dz - f(x)
    const double z_lo = std::max(0.0, lo - x);
    const double z_hi = hi - x;
    const double z_mid = std::max(z_lo, bump.center - x);
    auto g = [&](double z) { return bump.value(x + z) * jump.pdf(z); };
    double v = 0.0;
    if (z_mid > z_lo) v += quad::integrate(g, z_lo, z_mid, inner).value;
    if (z_hi > z_mid) v += quad::integrate(g, z_mid, z_hi, inner).value;
    return v - bump.value(x);
  };
  auto outer_fn = [&](double x) {
    const double pi = target.pdf(x);
    return (drift_scale * evaluator(x) * bump.derivative(x) + jump_part(x)) * pi;
  };
  std::vector<double> breaks;
  for (double b : target.breakpoints()) {
    if (b < hi) breaks.push_back(b);
  }
  breaks.push_back(lo);
  breaks.push_back(bump.center);
  std::sort(breaks.begin(), breaks.end());
  quad::Options outer;
  outer.abs_tol = 1e-10;
  outer.max_intervals = 4000;
  const quad::Result r = quad::integrate(outer_fn, 0.0, hi, outer, breaks);
  return {bump.id(), r.value, r.error};
}

Histogram histogram(std::span<const double> samples, std::size_t bins, bool log_scale, double lo, double hi) {
  if (bins < 2) throw std::invalid_argument("histogram: bins must be >= 2");
  if (samples.empty()) throw std::invalid_argument("histogram: empty sample");
  if (lo == 0.0 && hi == 0.0) {
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    lo = *mn;
    hi = *mx;
    if (!(hi > lo)) hi = lo + 1.0;
  }
  if (!(hi > lo)) throw std::invalid_argument("histogram: need lo < hi");
  if (log_scale && !(lo > 0.0)) throw std::invalid_argument("histogram: log bins need lo > 0");
  Histogram h;
  h.log_scale = log_scale;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(bins);
    h.edges[i] = log_scale ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))) : lo + f * (hi - lo);
  }
  h.edges.front() = lo;
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double x : samples) {
    if (x < lo || x > hi) continue;
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), x);
    std::size_t idx = static_cast<std::size_t>(it - h.edges.begin());
    idx = std::clamp<std::size_t>(idx, 1, bins) - 1;
    ++h.counts[idx];
    ++h.in_range;
  }
  h.density.assign(bins, 0.0);
  for (std::size_t i = 0; i < bins; ++i) {
    const double w = h.edges[i + 1] - h.edges[i];
    if (h.in_range > 0) h.density[i] = static_cast<double>(h.counts[i]) / (static_cast<double>(h.in_range) * w);
  }
  return h;
}

ChiSquareResult poisson_chi_square(std::span<const std::uint32_t> counts, double mean) {
  if (counts.empty()) throw std::invalid_argument("poisson_chi_square: no counts");
  if (!(mean > 0.0)) throw std::invalid_argument("poisson_chi_square: mean must be > 0");
  const boost::math::poisson_distribution<double> law(mean);
  const double n = static_cast<double>(counts.size());
  const std::uint32_t max_count = *std::max_element(counts.begin(), counts.end());

  // Bin upper limits (inclusive); the last bin is open above.
  std::vector<std::uint32_t> upper;
  double acc = 0.0;
  const auto k_end = static_cast<std::uint32_t>(std::max<double>(max_count, mean + 20.0 * std::sqrt(mean) + 20.0));
  for (std::uint32_t k = 0; k <= k_end; ++k) {
    acc += n * boost::math::pdf(law, k);
    const double rest = n * boost::math::cdf(boost::math::complement(law, k));
    if (acc >= 5.0 && rest >= 5.0) {
      upper.push_back(k);
      acc = 0.0;
    }
    if (rest < 5.0) break;
  }
  ChiSquareResult r;
  r.bins = upper.size() + 1;
  if (r.bins < 2) throw std::invalid_argument("poisson_chi_square: too few observations for binning");
  std::vector<double> observed(r.bins, 0.0);
  for (std::uint32_t c : counts) {
    const auto it = std::lower_bound(upper.begin(), upper.end(), c);
    observed[static_cast<std::size_t>(it - upper.begin())] += 1.0;
  }
  double prev = 0.0;
  for (std::size_t b = 0; b < r.bins; ++b) {
    const double cum = b + 1 < r.bins ? boost::math::cdf(law, upper[b]) : 1.0;
    const double expected = n * (cum - prev);
    prev = cum;
    r.statistic += (observed[b] - expected) * (observed[b] - expected) / expected;
  }
  r.dof = r.bins - 1;
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(r.dof), r.statistic));
  return r;
}

bool DiagnosticsReport::all_pass() const {
  return std::all_of(flags.begin(), flags.end(), [](const auto& f) { return f.second; });
}

DiagnosticsReport diagnose(const SampleSet& samples, const DriftField& field, const DiagnosticsOptions& opts) {
  DiagnosticsReport r;
  const auto& xs = samples.terminals;
  r.n = xs.size();
  r.ks = ks_distance(xs, field.target());
  r.ks_critical_99 = ks_critical_value(0.99, r.n);
  r.tail = tail_coverage(xs, field.target(), opts.thresholds);
  const std::size_t k = opts.hill_k != 0 ? opts.hill_k : static_cast<std::size_t>(std::sqrt(static_cast<double>(r.n)));
  if (k >= 10 && k < r.n) {
    r.hill = hill_estimator(xs, k);
    r.hill_available = true;
  }
  for (const Bump& b : opts.bumps) r.residuals.push_back(generator_residual(field, b));
  r.histogram = histogram(xs, opts.bins, opts.log_scale, opts.hist_lo, opts.hist_hi);
  r.clamp_events = samples.clamp_events;
  r.skeleton_violations = samples.skeleton_violations;

  r.flags.emplace_back("ks_below_gate", r.ks < opts.ks_gate);
  double worst = 0.0;
  for (const auto& res : r.residuals) worst = std::max(worst, std::abs(res.value));
  r.flags.emplace_back("generator_residuals_vanish", worst < opts.residual_gate);
  r.flags.emplace_back("no_positivity_clamps", r.clamp_events == 0);
  r.flags.emplace_back("path_structure_ok", r.skeleton_violations == 0);
  if (!samples.jump_counts.empty() && samples.jump_counts.size() >= 50) {
    r.jump_counts = poisson_chi_square(samples.jump_counts, samples.config.T);
    r.flags.emplace_back("jump_counts_poisson", r.jump_counts.p_value >= opts.chi_square_alpha);
  }
  return r;
}

std::string DiagnosticsReport::to_text() const {
  std::ostringstream os;
  os << "samples: " << n << "\n";
  os << "ks_distance: " << ks << " (99% Kolmogorov quantile " << ks_critical_99 << ")\n";
  os << "tail coverage:\n";
  os << "  threshold  empirical      target         ratio\n";
  for (const auto& t : tail) {
    os << "  " << t.threshold << "  " << t.empirical << "  " << t.target << "  " << t.ratio << "\n";
  }
  if (hill_available) {
    os << "hill: index " << hill.index << " +- " << hill.std_error << " (k = " << hill.k << ")"
       << (hill.heavy ? "" : " [no power tail]") << "\n";
  } else {
    os << "hill: not available (too few samples)\n";
  }
  os << "generator residuals:\n";
  for (const auto& res : residuals) os << "  " << res.id << "  " << res.value << "  (quadrature error " << res.error << ")\n";
  if (jump_counts.bins > 0) {
    os << "jump counts vs Poisson: chi2 " << jump_counts.statistic << ", dof " << jump_counts.dof << ", p "
       << jump_counts.p_value << "\n";
  }
  os << "positivity clamps: " << clamp_events << "\n";
  os << "skeleton violations: " << skeleton_violations << "\n";
  os << "flags:\n";
  for (const auto& [name, ok] : flags) os << "  " << name << ": " << (ok ? "pass" : "FAIL") << "\n";
  return os.str();
}

std::string DiagnosticsReport::to_kv() const {
  std::ostringstream os;
  auto kv = [&os](const std::string& k, double v) { os << k << '=' << format_double(v) << '\n'; };
  os << "n=" << n << '\n';
  kv("ks_distance", ks);
  kv("ks_critical_99", ks_critical_99);
  for (const auto& t : tail) {
    const std::string p = "tail." + format_double(t.threshold) + ".";
    kv(p + "empirical", t.empirical);
    kv(p + "target", t.target);
    kv(p + "ratio", t.ratio);
  }
  if (hill_available) {
    kv("hill.index", hill.index);
    kv("hill.std_error", hill.std_error);
    os << "hill.k=" << hill.k << '\n';
  }
  for (const auto& res : residuals) kv("residual." + res.id, res.value);
  if (jump_counts.bins > 0) {
    kv("jump_counts.chi2", jump_counts.statistic);
    os << "jump_counts.dof=" << jump_counts.dof << '\n';
    kv("jump_counts.p_value", jump_counts.p_value);
  }
  os << "clamp_events=" << clamp_events << '\n';
  os << "skeleton_violations=" << skeleton_violations << '\n';
  for (const auto& [name, ok] : flags) os << "flag." << name << '=' << (ok ? "pass" : "fail") << '\n';
  return os.str();
}

}  // namespace llmc
