#include "llmc/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "llmc/format.hpp"
#include "llmc/quadrature.hpp"

namespace llmc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Grid {
  std::vector<double> x;
  std::size_t top_begin = 0;  // first index of the top decade
};

Grid make_grid(const GridSpec& g) {
  Grid out;
  const double decades = std::log10(g.x_max / g.x_min);
  const auto n = static_cast<int>(std::lround(decades * g.points_per_decade));
  for (int k = 0; k <= n; ++k) {
    out.x.push_back(g.x_min * std::pow(10.0, decades * k / n));
  }
  out.x.back() = g.x_max;
  const double top = g.x_max / 10.0;
  out.top_begin = static_cast<std::size_t>(
      std::lower_bound(out.x.begin(), out.x.end(), top * (1.0 - 1e-12)) - out.x.begin());
  return out;
}

Verdict all_of(std::initializer_list<Verdict> vs) {
  bool inconclusive = false;
  for (Verdict v : vs) {
    if (v == Verdict::fail) return Verdict::fail;
    if (v == Verdict::inconclusive) inconclusive = true;
  }
  return inconclusive ? Verdict::inconclusive : Verdict::pass;
}

Verdict any_of(std::initializer_list<Verdict> vs) {
  bool inconclusive = false;
  for (Verdict v : vs) {
    if (v == Verdict::pass) return Verdict::pass;
    if (v == Verdict::inconclusive) inconclusive = true;
  }
  return inconclusive ? Verdict::inconclusive : Verdict::fail;
}

bool all_finite_positive(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double y) { return std::isfinite(y) && y > 0.0; });
}

bool any_infinite(const std::vector<double>& v) {
  return std::any_of(v.begin(), v.end(), [](double y) { return std::isinf(y); });
}

// Nonincreasing up to the slack: v[i+1] * slack <= v[i].
bool nonincreasing(const std::vector<double>& v, double slack) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] * slack > v[i - 1]) return false;
  }
  return true;
}

// Positive and never falls below slack * (value at the start of the decade).
bool bounded_below(const std::vector<double>& v, double slack) {
  if (v.empty() || !all_finite_positive(v)) return false;
  const double floor = slack * v.front();
  return std::all_of(v.begin(), v.end(), [floor](double y) { return y >= floor; });
}

// Nondecreasing up to the slack with overall growth of at least 1 / slack.
bool diverging(const std::vector<double>& v, double slack) {
  if (v.size() < 2 || !all_finite_positive(v)) return false;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < slack * v[i - 1]) return false;
  }
  return v.back() * slack >= v.front();
}

std::vector<std::pair<double, double>> zip(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < x.size(); ++i) out.emplace_back(x[i], y[i]);
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

void GridSpec::validate() const {
  if (!(x_min > 0.0) || !(x_max > x_min)) throw std::invalid_argument("grid: require 0 < x_min < x_max");
  if (x_max < 1e3) throw std::invalid_argument("grid: x_max must be >= 1e3");
  if (x_min > x_max / 100.0) throw std::invalid_argument("grid: need at least two decades below x_max");
  if (points_per_decade < 4) throw std::invalid_argument("grid: points_per_decade must be >= 4");
  if (!(slack > 0.0 && slack <= 1.0)) throw std::invalid_argument("grid: slack must lie in (0, 1]");
  if (!(hazard_eps > 0.0)) throw std::invalid_argument("grid: hazard_eps must be > 0");
  if (!(index_tol >= 0.0)) throw std::invalid_argument("grid: index_tol must be >= 0");
}

double estimate_tail_index(const TargetDensity& target, double x) {
  const double lo = target.tail(x / 10.0);
  const double hi = target.tail(x);
  if (!(lo > 0.0) || !(hi > 0.0)) return kInf;
  return std::log10(lo / hi);
}

const ConditionResult& ConditionReport::find(std::string_view id) const {
  for (const auto& c : conditions) {
    if (c.id == id) return c;
  }
  throw std::out_of_range("no condition with id '" + std::string(id) + "'");
}

Verdict ConditionReport::overall() const { return any_of({subexponential_route, regular_variation_route}); }

ConditionReport check_theorem_conditions(const JumpDistribution& jump, const TargetDensity& target,
                                         const GridSpec& grid) {
  grid.validate();
  ConditionReport report;
  report.jump = jump.describe();
  report.target = target.name();
  report.grid = grid;

  const Grid g = make_grid(grid);
  const std::vector<double> top(g.x.begin() + static_cast<std::ptrdiff_t>(g.top_begin), g.x.end());
  auto over_top = [&](auto&& fn) {
    std::vector<double> out;
    out.reserve(top.size());
    for (double x : top) out.push_back(fn(x));
    return out;
  };
  auto add = [&](std::string id, std::string description, Verdict v, std::string evidence,
                 std::vector<std::pair<double, double>> samples = {}) -> Verdict {
    report.conditions.push_back({std::move(id), std::move(description), v, std::move(evidence), std::move(samples)});
    return v;
  };

  const std::vector<double> hazard = over_top([&](double x) { return jump.hazard(x); });
  const bool underflow = any_infinite(hazard);
  if (underflow) {
    report.warnings.push_back("jump tail underflows on the top decade; hazard-based verdicts are inconclusive");
  }

  // 1. Full support. A zero pdf with no mass left on one side is just underflow.
  Verdict c1 = Verdict::pass;
  std::string c1_note = "pdf > 0 on every grid point";
  for (double x : g.x) {
    if (jump.pdf(x) > 0.0) continue;
    const double tiny = std::numeric_limits<double>::min();
    if (jump.tail(x) >= tiny && jump.cdf(x) >= tiny) {
      c1 = Verdict::fail;
      c1_note = "pdf vanishes at x = " + fmt(x) + " with mass on both sides";
      break;
    }
    c1 = Verdict::inconclusive;
    c1_note = "pdf underflows at x = " + fmt(x);
    break;
  }
  add("c1_full_support", "mu(I) > 0 for every open interval I", c1, c1_note);

  // 2. Hazard eventually decreasing, tending to 0, with x q(x) -> infinity.
  Verdict c2a = Verdict::inconclusive;
  Verdict c2b = Verdict::inconclusive;
  Verdict c2c = Verdict::inconclusive;
  {
    std::string ev = "q on top decade from " + fmt(hazard.front()) + " to " + fmt(hazard.back());
    if (!underflow) c2a = nonincreasing(hazard, grid.slack) ? Verdict::pass : Verdict::fail;
    add("c2_hazard_decreasing", "hazard q is eventually decreasing", c2a, ev, zip(top, hazard));

    if (!underflow) {
      const bool small = hazard.back() < grid.hazard_eps;
      const bool falling = hazard.back() <= grid.slack * hazard.front();
      c2b = small && falling ? Verdict::pass : Verdict::fail;
    }
    add("c2_hazard_vanishes", "q(x) -> 0", c2b,
        "q(x_max) = " + fmt(hazard.back()) + " (eps " + fmt(grid.hazard_eps) + "), q(x_max)/q(x_max/10) = " +
            fmt(hazard.back() / hazard.front()));

    std::vector<double> xq(top.size());
    for (std::size_t i = 0; i < top.size(); ++i) xq[i] = top[i] * hazard[i];
    if (!underflow) c2c = diverging(xq, grid.slack) ? Verdict::pass : Verdict::fail;
    add("c2_x_hazard_diverges", "x q(x) -> infinity", c2c,
        "x q(x) on top decade from " + fmt(xq.front()) + " to " + fmt(xq.back()) + " (growth " +
            fmt(xq.back() / xq.front()) + ")",
        zip(top, xq));
  }

  // 3. exp(z q(z)) f(z) integrable: decade increments must shrink.
  Verdict c3 = Verdict::inconclusive;
  {
    auto integrand = [&jump](double z) {
      const double q = jump.hazard(z);
      if (std::isinf(q)) return z > 0.0 ? 0.0 : kInf;
      return std::exp(z * q + std::log(q) + jump.log_tail(z));
    };
    quad::Options o;
    o.abs_tol = 1e-300;
    o.rel_tol = 1e-8;
    o.max_intervals = 4000;
    std::vector<double> edges;
    for (double e = grid.x_max; e >= grid.x_min * (1.0 - 1e-12); e /= 10.0) edges.push_back(e);
    std::reverse(edges.begin(), edges.end());
    std::vector<double> increments;
    std::vector<std::pair<double, double>> samples;
    bool failed_quad = false;
    for (std::size_t i = 1; i < edges.size(); ++i) {
      try {
        increments.push_back(quad::integrate(integrand, edges[i - 1], edges[i], o).value);
      } catch (const quad::QuadratureError& e) {
        increments.push_back(e.estimate());
        failed_quad = true;
      }
      samples.emplace_back(edges[i], increments.back());
    }
    std::string ev;
    if (increments.size() >= 3 && !underflow && !failed_quad) {
      const double d0 = increments[increments.size() - 3];
      const double d1 = increments[increments.size() - 2];
      const double d2 = increments.back();
      ev = "decade increments ... " + fmt(d0) + ", " + fmt(d1) + ", " + fmt(d2);
      if (!std::isfinite(d2) || d2 >= grid.slack * d1) {
        c3 = Verdict::fail;
      } else if (d2 <= 0.5 * d1 && d1 <= 0.5 * d0) {
        c3 = Verdict::pass;
      }
    } else {
      ev = failed_quad ? "quadrature did not converge" : "insufficient decades or tail underflow";
    }
    add("c3_exp_hazard_integrable", "exp(z q(z)) f(z) is integrable", c3, ev, std::move(samples));
  }

  // 4a. liminf f_mu / pi > 0 and C q(x) <= (x q(x))'.
  const std::vector<double> ratio = over_top([&](double x) {
    return std::exp(std::log(jump.hazard(x)) + jump.log_tail(x) - std::log(target.pdf(x)));
  });
  Verdict c4a_ratio = Verdict::inconclusive;
  if (!underflow) c4a_ratio = bounded_below(ratio, grid.slack) ? Verdict::pass : Verdict::fail;
  add("c4a_density_ratio", "liminf f_mu(x) / pi(x) > 0", c4a_ratio,
      "f_mu/pi on top decade from " + fmt(ratio.front()) + " to " + fmt(ratio.back()) + ", min " +
          fmt(*std::min_element(ratio.begin(), ratio.end())),
      zip(top, ratio));

  const std::vector<double> growth = over_top([&](double x) {
    const double h = 1e-5 * x;
    const double d = ((x + h) * jump.hazard(x + h) - (x - h) * jump.hazard(x - h)) / (2.0 * h);
    return d / jump.hazard(x);
  });
  Verdict c4a_growth = Verdict::inconclusive;
  if (!underflow) c4a_growth = bounded_below(growth, grid.slack) ? Verdict::pass : Verdict::fail;
  add("c4a_hazard_growth", "C q(x) <= (x q(x))' eventually for some C > 0", c4a_growth,
      "(x q)'/q on top decade from " + fmt(growth.front()) + " to " + fmt(growth.back()), zip(top, growth));

  // 4b. liminf (x (f'/f + q) + 1) f_mu / pi > 0.
  const std::vector<double> expr4b = over_top([&](double x) {
    const double inner = x * (jump.log_pdf_derivative(x) + jump.hazard(x)) + 1.0;
    return inner * std::exp(std::log(jump.hazard(x)) + jump.log_tail(x) - std::log(target.pdf(x)));
  });
  Verdict c4b = Verdict::inconclusive;
  if (!underflow) c4b = bounded_below(expr4b, grid.slack) ? Verdict::pass : Verdict::fail;
  add("c4b_liminf", "liminf (x (f'/f + f/F) + 1) f_mu/pi > 0", c4b,
      "expression on top decade from " + fmt(expr4b.front()) + " to " + fmt(expr4b.back()), zip(top, expr4b));

  const Verdict c4 = any_of({all_of({c4a_ratio, c4a_growth}), c4b});

  // Pitman: int_0^x exp(z q(x)) f(z) dz -> 1.
  {
    std::vector<double> xs = {grid.x_max / 100.0, grid.x_max / 10.0, grid.x_max};
    std::vector<double> values;
    Verdict v = Verdict::inconclusive;
    bool ok = true;
    for (double x : xs) {
      const double qx = jump.hazard(x);
      if (std::isinf(qx)) {
        ok = false;
        break;
      }
      auto integrand = [&jump, qx](double z) {
        const double q = jump.hazard(z);
        if (std::isinf(q)) return 0.0;
        return std::exp(z * qx + std::log(q) + jump.log_tail(z));
      };
      quad::Options o;
      o.abs_tol = 1e-12;
      o.rel_tol = 1e-10;
      o.max_intervals = 4000;
      try {
        values.push_back(quad::integrate(integrand, 0.0, x, o).value);
      } catch (const quad::QuadratureError& e) {
        values.push_back(e.estimate());
        ok = false;
      }
    }
    std::string ev = "integral at x = ";
    for (std::size_t i = 0; i < values.size(); ++i) ev += fmt(xs[i]) + ": " + fmt(values[i]) + "  ";
    if (ok && values.size() == xs.size()) {
      const double d0 = std::abs(values[0] - 1.0);
      const double d1 = std::abs(values[1] - 1.0);
      const double d2 = std::abs(values[2] - 1.0);
      if (d2 <= d1 && d1 <= d0 && d2 < 0.1) {
        v = Verdict::pass;
      } else if (d2 > d0) {
        v = Verdict::fail;
      }
    }
    add("pitman", "int_0^x exp(z q(x)) f(z) dz approaches 1 monotonically", v, ev, zip(xs, values));
  }

  report.subexponential_route = all_of({c1, c2a, c2b, c2c, c3, c4});

  // Regular-variation route: shifted Pareto jumps with alpha < rho, target
  // regularly varying and eventually monotone.
  {
    const double rho = estimate_tail_index(target, grid.x_max);
    const double rho_prev = estimate_tail_index(target, grid.x_max / 10.0);
    report.target_tail_index = rho;
    const bool stable = std::isfinite(rho) && rho > 0.0 && std::abs(rho - rho_prev) <= 0.05 * rho;
    const Verdict rv = add("rv_target_index", "target tail is regularly varying with index -rho",
                           stable ? Verdict::pass : Verdict::fail,
                           "rho estimate " + fmt(rho) + " on top decade, " + fmt(rho_prev) + " on the decade below",
                           {{grid.x_max / 10.0, rho_prev}, {grid.x_max, rho}});

    Verdict gate = Verdict::fail;
    std::string ev;
    if (jump.family() != JumpFamily::lomax) {
      ev = "jump law is not a shifted Pareto (lomax) distribution";
    } else if (!stable) {
      ev = "no stable tail index for the target";
    } else {
      const double alpha = jump.first();
      ev = "alpha = " + fmt(alpha) + ", rho = " + fmt(rho);
      if (alpha < rho - grid.index_tol) {
        gate = Verdict::pass;
      } else if (std::abs(alpha - rho) <= grid.index_tol) {
        gate = Verdict::pass;
        ev += " (boundary alpha == rho within tolerance)";
        report.warnings.push_back("lomax alpha = " + fmt(alpha) + " is not strictly below the target index rho = " +
                                  fmt(rho) + "; the ergodicity result asks for alpha < rho");
      } else {
        ev += " (alpha > rho)";
        report.warnings.push_back("lomax alpha = " + fmt(alpha) + " exceeds the target index rho = " + fmt(rho));
      }
    }
    add("rv_alpha_gate", "shifted Pareto jumps with alpha < rho", gate, ev);

    const std::vector<double> dens = over_top([&](double x) { return target.pdf(x); });
    const bool monotone = nonincreasing(dens, 1.0);
    const Verdict mono = add("rv_target_monotone", "target density eventually monotone",
                             monotone ? Verdict::pass : Verdict::fail,
                             monotone ? "pdf nonincreasing on top decade" : "pdf increases on top decade",
                             zip(top, dens));
    report.regular_variation_route = all_of({c1, rv, gate, mono});
  }
  return report;
}

std::string ConditionReport::to_text() const {
  std::ostringstream os;
  os << "jump:   " << jump << "\n";
  os << "target: " << target << "\n";
  os << "grid:   [" << grid.x_min << ", " << grid.x_max << "], " << grid.points_per_decade
     << " points/decade, slack " << grid.slack << "\n\n";
  for (const auto& c : conditions) {
    os << "  [" << to_string(c.verdict) << "] " << c.id << " - " << c.description << "\n";
    os << "      " << c.evidence << "\n";
  }
  os << "\nsubexponential route (hazard conditions 1-4): " << to_string(subexponential_route) << "\n";
  os << "regular-variation route (shifted Pareto, alpha < rho): " << to_string(regular_variation_route) << "\n";
  os << "overall: " << to_string(overall()) << "\n";
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  os << "note: verdicts are grid-based evidence for limits, not proofs\n";
  return os.str();
}

std::string ConditionReport::to_json() const {
  nlohmann::ordered_json j;
  j["jump"] = jump;
  j["target"] = target;
  j["grid"] = {{"x_min", grid.x_min},
               {"x_max", grid.x_max},
               {"points_per_decade", grid.points_per_decade},
               {"slack", grid.slack},
               {"hazard_eps", grid.hazard_eps},
               {"index_tol", grid.index_tol}};
  auto& arr = j["conditions"] = nlohmann::ordered_json::array();
  for (const auto& c : conditions) {
    nlohmann::ordered_json item;
    item["id"] = c.id;
    item["description"] = c.description;
    item["verdict"] = std::string(to_string(c.verdict));
    item["evidence"] = c.evidence;
    auto& s = item["samples"] = nlohmann::ordered_json::array();
    for (const auto& [x, y] : c.samples) s.push_back({x, std::isfinite(y) ? nlohmann::ordered_json(y) : nullptr});
    arr.push_back(std::move(item));
  }
  j["subexponential_route"] = std::string(to_string(subexponential_route));
  j["regular_variation_route"] = std::string(to_string(regular_variation_route));
  j["target_tail_index"] = target_tail_index;
  j["overall"] = std::string(to_string(overall()));
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

}  // namespace llmc
