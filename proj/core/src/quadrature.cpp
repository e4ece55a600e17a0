#include "llmc/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

namespace llmc::quad {
namespace {

// Kronrod abscissae and weights (QUADPACK qk15). Odd indices are the
// 7-point Gauss abscissae.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double value;
  double error;
};

struct ByError {
  bool operator()(const Panel& l, const Panel& r) const { return l.error < r.error; }
};

Panel make_panel(const Integrand& f, double a, double b) {
  const Result r = gauss_kronrod15(f, a, b);
  return Panel{a, b, r.value, r.error};
}

bool can_bisect(const Panel& p) {
  const double mid = 0.5 * (p.a + p.b);
  const double scale = std::max(std::abs(p.a), std::abs(p.b));
  return mid > p.a && mid < p.b &&
         (p.b - p.a) > 64.0 * std::numeric_limits<double>::epsilon() * scale;
}

}  // namespace

Result gauss_kronrod15(const Integrand& f, double a, double b) {
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  constexpr double kUflow = std::numeric_limits<double>::min();

  const double centr = 0.5 * (a + b);
  const double hlgth = 0.5 * (b - a);
  const double dhlgth = std::abs(hlgth);

  std::array<double, 7> fv1{};
  std::array<double, 7> fv2{};
  const double fc = f(centr);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  double resabs = std::abs(resk);

  for (int j = 0; j < 3; ++j) {
    const int jtw = 2 * j + 1;
    const double absc = hlgth * kXgk[jtw];
    const double f1 = f(centr - absc);
    const double f2 = f(centr + absc);
    fv1[jtw] = f1;
    fv2[jtw] = f2;
    resg += kWg[j] * (f1 + f2);
    resk += kWgk[jtw] * (f1 + f2);
    resabs += kWgk[jtw] * (std::abs(f1) + std::abs(f2));
  }
  for (int j = 0; j < 4; ++j) {
    const int jtwm1 = 2 * j;
    const double absc = hlgth * kXgk[jtwm1];
    const double f1 = f(centr - absc);
    const double f2 = f(centr + absc);
    fv1[jtwm1] = f1;
    fv2[jtwm1] = f2;
    resk += kWgk[jtwm1] * (f1 + f2);
    resabs += kWgk[jtwm1] * (std::abs(f1) + std::abs(f2));
  }

  const double reskh = resk * 0.5;
  double resasc = kWgk[7] * std::abs(fc - reskh);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
  }

  Result out;
  out.value = resk * hlgth;
  resabs *= dhlgth;
  resasc *= dhlgth;
  double abserr = std::abs((resk - resg) * hlgth);
  if (resasc != 0.0 && abserr != 0.0) {
    abserr = resasc * std::min(1.0, std::pow(200.0 * abserr / resasc, 1.5));
  }
  if (resabs > kUflow / (50.0 * kEps)) {
    abserr = std::max(kEps * 50.0 * resabs, abserr);
  }
  out.error = abserr;
  out.intervals = 1;
  return out;
}

Result integrate(const Integrand& f, double a, double b, const Options& opts,
                 std::span<const double> breaks) {
  if (!(a <= b)) {
    throw std::invalid_argument("quad::integrate: require a <= b");
  }
  if (a == b) {
    return Result{};
  }

  std::vector<double> cuts;
  cuts.reserve(breaks.size() + 2);
  cuts.push_back(a);
  for (double x : breaks) {
    if (x > a && x < b) cuts.push_back(x);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  if (opts.max_panel_width > 0.0) {
    std::vector<double> refined;
    refined.push_back(cuts.front());
    for (std::size_t i = 1; i < cuts.size(); ++i) {
      const double lo = cuts[i - 1];
      const double hi = cuts[i];
      const auto pieces = static_cast<std::size_t>(std::ceil((hi - lo) / opts.max_panel_width));
      for (std::size_t k = 1; k < pieces; ++k) {
        refined.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(pieces));
      }
      refined.push_back(hi);
    }
    cuts = std::move(refined);
  }

  std::priority_queue<Panel, std::vector<Panel>, ByError> active;
  std::vector<Panel> settled;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    Panel p = make_panel(f, cuts[i - 1], cuts[i]);
    total += p.value;
    total_err += p.error;
    active.push(p);
  }
  std::size_t count = active.size();

  auto tolerance = [&]() { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };

  while (total_err > tolerance() && !active.empty()) {
    if (count >= opts.max_intervals) {
      std::ostringstream msg;
      msg << "adaptive quadrature on [" << a << ", " << b << "] exhausted " << opts.max_intervals
          << " intervals; estimate " << total << " with error " << total_err
          << " (tolerance " << tolerance() << ")";
      throw QuadratureError(msg.str(), total, total_err);
    }
    Panel worst = active.top();
    active.pop();
    if (!can_bisect(worst)) {
      settled.push_back(worst);
      continue;
    }
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = make_panel(f, worst.a, mid);
    Panel right = make_panel(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    active.push(left);
    active.push(right);
    ++count;
  }

  // Re-sum in positional order so the result does not carry the drift of the
  // incremental updates.
  while (!active.empty()) {
    settled.push_back(active.top());
    active.pop();
  }
  std::sort(settled.begin(), settled.end(), [](const Panel& l, const Panel& r) { return l.a < r.a; });
  Result out;
  for (const Panel& p : settled) {
    out.value += p.value;
    out.error += p.error;
  }
  out.intervals = settled.size();
  return out;
}

Result integrate_to_infinity(const Integrand& f, double a, const Options& opts) {
  if (!(a >= 0.0) || !std::isfinite(a)) {
    throw std::invalid_argument("quad::integrate_to_infinity: require finite a >= 0");
  }
  Integrand mapped;
  if (a > 0.0) {
    mapped = [&f, a](double u) {
      const double w = 1.0 - u;
      const double x = a / w;
      if (!std::isfinite(x)) return 0.0;
      const double fx = f(x);
      return fx == 0.0 ? 0.0 : fx * a / (w * w);
    };
  } else {
    mapped = [&f](double u) {
      const double w = 1.0 - u;
      const double x = u / w;
      if (!std::isfinite(x)) return 0.0;
      const double fx = f(x);
      return fx == 0.0 ? 0.0 : fx / (w * w);
    };
  }
  Options inner = opts;
  inner.max_panel_width = 0.0;
  return integrate(mapped, 0.0, 1.0, inner);
}

}  // namespace llmc::quad
