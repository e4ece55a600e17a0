#include "llmc/target_density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <boost/math/tools/roots.hpp>

#include "llmc/format.hpp"
#include "llmc/quadrature.hpp"

namespace llmc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNodesPerSegment = 64;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

quad::Options table_options() {
  quad::Options o;
  o.abs_tol = 1e-13;
  o.rel_tol = 1e-12;
  o.max_intervals = 4000;
  return o;
}

std::string describe_segment(const Segment& s) {
  std::ostringstream os;
  os << "(" << format_double(s.lower) << ", " << format_double(s.upper) << "] " << to_string(s.form);
  return os.str();
}

void validate_form(const Segment& seg) {
  const std::string where = describe_segment(seg);
  const bool unbounded = std::isinf(seg.upper);
  const bool touches_zero = seg.lower == 0.0;
  std::visit(
      Overloaded{
          [&](const ExpDecay& f) {
            if (!std::isfinite(f.rate)) throw std::invalid_argument("non-finite rate in " + where);
            if (unbounded && f.rate <= 0.0) {
              throw std::invalid_argument("divergent mass: exp_decay with rate <= 0 on unbounded segment " + where);
            }
          },
          [&](const Power& f) {
            if (!std::isfinite(f.exponent) || !std::isfinite(f.offset)) {
              throw std::invalid_argument("non-finite parameter in " + where);
            }
            if (f.offset < 0.0) throw std::invalid_argument("negative power offset in " + where);
            if (unbounded && (f.exponent >= -1.0 || f.offset != 0.0)) {
              throw std::invalid_argument("divergent mass: power tail needs exponent < -1 and zero offset on " +
                                          where);
            }
            if (touches_zero && f.exponent <= -1.0) {
              throw std::invalid_argument("divergent mass: power exponent <= -1 at the origin on " + where);
            }
          },
          [&](const SineBand& f) {
            if (!(f.base > std::abs(f.amplitude))) {
              throw std::invalid_argument("sine_band requires base > |amplitude| on " + where);
            }
            if (!(f.power > 0.0)) throw std::invalid_argument("sine_band requires power > 0 on " + where);
            if (unbounded) throw std::invalid_argument("divergent mass: sine_band on unbounded segment " + where);
          },
          [&](const LognormalTail& f) {
            if (!(f.sigma > 0.0) || !std::isfinite(f.m)) {
              throw std::invalid_argument("lognormal_tail requires sigma > 0 on " + where);
            }
          },
          [&](const WeibullTail& f) {
            if (!(f.alpha > 0.0) || !(f.beta > 0.0)) {
              throw std::invalid_argument("weibull_tail requires alpha, beta > 0 on " + where);
            }
          },
      },
      seg.form);
}

std::vector<double> parse_args(std::string_view body, std::string_view text) {
  std::vector<double> args;
  while (true) {
    const auto comma = body.find(',');
    const std::string_view item = body.substr(0, comma);
    const auto value = parse_double(item);
    if (!value) throw std::invalid_argument("bad numeric argument in '" + std::string(text) + "'");
    args.push_back(*value);
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return args;
}

}  // namespace

double scaled_value(const SegmentForm& form, double x) {
  return std::visit(
      Overloaded{
          [x](const ExpDecay& f) { return std::exp(-f.rate * x); },
          [x](const Power& f) { return std::pow(x, f.exponent); },
          [x](const SineBand& f) { return f.base + f.amplitude * std::sin(std::pow(x, f.power)); },
          [x](const LognormalTail& f) {
            const double z = (std::log(x) - f.m) / f.sigma;
            return std::exp(-0.5 * z * z) / (x * f.sigma * std::sqrt(2.0 * std::numbers::pi));
          },
          [x](const WeibullTail& f) {
            const double bx = f.beta * x;
            return std::pow(bx, f.alpha - 1.0) * std::exp(-std::pow(bx, f.alpha));
          },
      },
      form);
}

double offset_value(const SegmentForm& form) noexcept {
  if (const auto* p = std::get_if<Power>(&form)) return p->offset;
  return 0.0;
}

std::string to_string(const SegmentForm& form) {
  auto fmt = format_double;
  return std::visit(
      Overloaded{
          [&](const ExpDecay& f) { return "exp_decay(" + fmt(f.rate) + ")"; },
          [&](const Power& f) { return "power(" + fmt(f.exponent) + "," + fmt(f.offset) + ")"; },
          [&](const SineBand& f) {
            return "sine_band(" + fmt(f.amplitude) + "," + fmt(f.base) + "," + fmt(f.power) + ")";
          },
          [&](const LognormalTail& f) { return "lognormal_tail(" + fmt(f.m) + "," + fmt(f.sigma) + ")"; },
          [&](const WeibullTail& f) { return "weibull_tail(" + fmt(f.alpha) + "," + fmt(f.beta) + ")"; },
      },
      form);
}

SegmentForm parse_form(std::string_view text) {
  std::string compact;
  for (char ch : text) {
    if (ch != ' ' && ch != '\t') compact.push_back(ch);
  }
  const auto open = compact.find('(');
  if (open == std::string::npos || compact.back() != ')') {
    throw std::invalid_argument("expected name(args...) but got '" + std::string(text) + "'");
  }
  const std::string name = compact.substr(0, open);
  const auto args = parse_args(std::string_view(compact).substr(open + 1, compact.size() - open - 2), text);
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi) {
      throw std::invalid_argument("wrong number of arguments in '" + std::string(text) + "'");
    }
  };
  if (name == "exp_decay") {
    need(1, 1);
    return ExpDecay{args[0]};
  }
  if (name == "power") {
    need(1, 2);
    return Power{args[0], args.size() > 1 ? args[1] : 0.0};
  }
  if (name == "sine_band") {
    need(3, 3);
    return SineBand{args[0], args[1], args[2]};
  }
  if (name == "lognormal_tail") {
    need(2, 2);
    return LognormalTail{args[0], args[1]};
  }
  if (name == "weibull_tail") {
    need(2, 2);
    return WeibullTail{args[0], args[1]};
  }
  throw std::invalid_argument("unknown segment form '" + name + "'");
}

TargetDensity TargetDensity::build(std::vector<Segment> segments, std::string name) {
  if (segments.empty()) throw std::invalid_argument("target density needs at least one segment");
  if (segments.front().lower != 0.0) {
    throw std::invalid_argument("segments must start at 0; first segment starts at " +
                                format_double(segments.front().lower));
  }
  if (!std::isinf(segments.back().upper)) {
    throw std::invalid_argument("segments must extend to infinity; last segment ends at " +
                                format_double(segments.back().upper));
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    if (!(s.lower < s.upper) || s.lower < 0.0) {
      throw std::invalid_argument("segment " + describe_segment(s) + " has lower >= upper");
    }
    if (i > 0 && segments[i - 1].upper != s.lower) {
      throw std::invalid_argument("segments do not tile (0, inf): gap or overlap between " +
                                  describe_segment(segments[i - 1]) + " and " + describe_segment(s));
    }
    validate_form(s);
  }

  TargetDensity t;
  t.name_ = std::move(name);
  t.segments_ = std::move(segments);
  for (std::size_t i = 1; i < t.segments_.size(); ++i) t.breakpoints_.push_back(t.segments_[i].lower);

  // Positivity of every evaluator on a probe grid inside each segment.
  for (std::size_t i = 0; i < t.segments_.size(); ++i) {
    const Segment& s = t.segments_[i];
    const double hi = std::isinf(s.upper) ? std::max(2.0 * s.lower, s.lower + 10.0) : s.upper;
    for (int k = 1; k < 64; ++k) {
      const double x = s.lower + (hi - s.lower) * k / 64.0;
      const double g = scaled_value(s.form, x) + offset_value(s.form);
      if (!(g > 0.0) || !std::isfinite(g)) {
        throw std::invalid_argument("evaluator is not positive and finite at x = " + format_double(x) + " on " +
                                    describe_segment(s));
      }
    }
  }

  // c * sum(scaled mass) + sum(offset mass) = 1.
  double scaled_mass = 0.0;
  double offset_mass = 0.0;
  quad::Options opts = table_options();
  opts.abs_tol = 1e-10;
  for (std::size_t i = 0; i < t.segments_.size(); ++i) {
    const Segment& s = t.segments_[i];
    const SegmentForm form = s.form;
    auto g = [form](double x) { return scaled_value(form, x); };
    quad::Result r;
    try {
      if (std::isinf(s.upper)) {
        r = quad::integrate_to_infinity(g, s.lower, opts);
      } else {
        quad::Options o = opts;
        o.max_panel_width = t.panel_width(i);
        r = quad::integrate(g, s.lower, s.upper, o);
      }
    } catch (const quad::QuadratureError& e) {
      throw std::invalid_argument("segment mass did not converge (possible divergent integral) on " +
                                  describe_segment(s) + ": " + e.what());
    }
    if (!std::isfinite(r.value) || r.value <= 0.0) {
      throw std::invalid_argument("divergent or empty mass on " + describe_segment(s));
    }
    scaled_mass += r.value;
    if (offset_value(s.form) != 0.0) offset_mass += offset_value(s.form) * (s.upper - s.lower);
  }
  const double c = (1.0 - offset_mass) / scaled_mass;
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw std::invalid_argument("unscaled offsets carry mass " + format_double(offset_mass) +
                                " >= 1; no positive normalizing constant exists");
  }
  t.norm_const_ = c;
  t.build_tables();
  return t;
}

TargetDensity TargetDensity::builtin(std::string_view name) {
  const double inf = kInf;
  if (name == "f1") {
    return build({{0.0, 2.5, ExpDecay{0.5}}, {2.5, 10.0, SineBand{1.0, 1.5, 1.5}}, {10.0, inf, WeibullTail{0.5, 1.0}}},
                 "f1");
  }
  if (name == "f2") {
    return build({{0.0, 5.0, ExpDecay{0.5}},
                  {5.0, 7.0, Power{-2.0, 0.12}},
                  {7.0, inf, LognormalTail{0.0, std::numbers::sqrt2}}},
                 "f2");
  }
  if (name == "f3") {
    return build({{0.0, 5.0, ExpDecay{0.5}}, {5.0, 7.0, Power{-2.0, 0.12}}, {7.0, inf, Power{-2.0, 0.0}}}, "f3");
  }
  if (name == "f4") {
    return build({{0.0, 2.5, ExpDecay{0.5}}, {2.5, 10.0, SineBand{1.0, 1.5, 1.5}}, {10.0, inf, Power{-2.0, 0.0}}},
                 "f4");
  }
  throw std::invalid_argument("unknown builtin density '" + std::string(name) + "' (expected f1|f2|f3|f4)");
}

std::vector<std::string> TargetDensity::builtin_names() { return {"f1", "f2", "f3", "f4"}; }

double TargetDensity::panel_width(std::size_t index) const {
  const Segment& s = segments_[index];
  const auto* sine = std::get_if<SineBand>(&s.form);
  if (sine == nullptr || std::isinf(s.upper)) return 0.0;
  // Local angular frequency of sin(x^p) is p x^(p-1); panels stay below half
  // of the shortest local wavelength.
  const double lo = std::max(s.lower, 1e-12);
  const double omega = sine->power * std::max(std::pow(lo, sine->power - 1.0), std::pow(s.upper, sine->power - 1.0));
  return std::numbers::pi / omega;
}

double TargetDensity::pdf_on_segment(std::size_t index, double x) const {
  const SegmentForm& form = segments_[index].form;
  return norm_const_ * scaled_value(form, x) + offset_value(form);
}

double TargetDensity::pdf(double x) const {
  if (!(x > 0.0)) throw std::domain_error("pdf: x must be > 0, got " + format_double(x));
  if (std::isinf(x)) return 0.0;
  return pdf_on_segment(segment_index(x), x);
}

std::size_t TargetDensity::segment_index(double x) const {
  return static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) - breakpoints_.begin());
}

std::size_t TargetDensity::segment_index_left(double x) const {
  return static_cast<std::size_t>(std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x) - breakpoints_.begin());
}

double TargetDensity::segment_integral(std::size_t index, double a, double b) const {
  if (a == b) return 0.0;
  quad::Options o = table_options();
  o.max_panel_width = panel_width(index);
  return quad::integrate([this, index](double x) { return pdf_on_segment(index, x); }, a, b, o).value;
}

double TargetDensity::segment_tail_integral(std::size_t index, double a) const {
  // Relative accuracy only: far-tail masses are far below any absolute floor.
  quad::Options o = table_options();
  o.abs_tol = 1e-300;
  return quad::integrate_to_infinity([this, index](double x) { return pdf_on_segment(index, x); }, a, o).value;
}

void TargetDensity::build_tables() {
  const std::size_t n = segments_.size();
  tables_.assign(n, {});
  segment_mass_.assign(n, 0.0);
  mass_before_.assign(n, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const Segment& s = segments_[i];
    NodeTable& tab = tables_[i];
    const std::size_t k_nodes = kNodesPerSegment;
    if (!std::isinf(s.upper)) {
      for (std::size_t k = 0; k <= k_nodes; ++k) {
        tab.x.push_back(s.lower + (s.upper - s.lower) * static_cast<double>(k) / static_cast<double>(k_nodes));
      }
      tab.x.back() = s.upper;
      tab.mass.assign(tab.x.size(), 0.0);
      for (std::size_t k = 1; k < tab.x.size(); ++k) {
        tab.mass[k] = tab.mass[k - 1] + segment_integral(i, tab.x[k - 1], tab.x[k]);
      }
      segment_mass_[i] = tab.mass.back();
    } else {
      for (std::size_t k = 0; k < k_nodes; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(k_nodes);
        tab.x.push_back(s.lower > 0.0 ? s.lower / (1.0 - u) : u / (1.0 - u));
      }
      tab.mass.assign(tab.x.size(), 0.0);
      tab.mass.back() = segment_tail_integral(i, tab.x.back());
      for (std::size_t k = tab.x.size() - 1; k-- > 0;) {
        tab.mass[k] = tab.mass[k + 1] + segment_integral(i, tab.x[k], tab.x[k + 1]);
      }
      segment_mass_[i] = tab.mass.front();
    }
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mass_before_[i] = acc;
    acc += segment_mass_[i];
  }
  total_mass_ = acc;
}

double TargetDensity::cdf_within(std::size_t index, double x) const {
  const NodeTable& tab = tables_[index];
  auto it = std::upper_bound(tab.x.begin(), tab.x.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - tab.x.begin()) - 1;
  if (k + 1 >= tab.x.size()) return tab.mass.back();
  return tab.mass[k] + segment_integral(index, tab.x[k], x);
}

double TargetDensity::tail_within(std::size_t index, double x) const {
  const NodeTable& tab = tables_[index];
  auto it = std::upper_bound(tab.x.begin(), tab.x.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - tab.x.begin()) - 1;
  if (k + 1 >= tab.x.size()) {
    return x == tab.x.back() ? tab.mass.back() : segment_tail_integral(index, x);
  }
  return tab.mass[k + 1] + segment_integral(index, x, tab.x[k + 1]);
}

double TargetDensity::cdf(double x) const {
  if (!(x > 0.0)) throw std::domain_error("cdf: x must be > 0, got " + format_double(x));
  if (std::isinf(x)) return 1.0;
  const std::size_t i = segment_index(x);
  if (std::isinf(segments_[i].upper)) {
    return 1.0 - tail_within(i, x) / total_mass_;
  }
  return (mass_before_[i] + cdf_within(i, x)) / total_mass_;
}

double TargetDensity::tail(double x) const {
  if (!(x > 0.0)) throw std::domain_error("tail: x must be > 0, got " + format_double(x));
  if (std::isinf(x)) return 0.0;
  const std::size_t i = segment_index(x);
  if (std::isinf(segments_[i].upper)) {
    return tail_within(i, x) / total_mass_;
  }
  return 1.0 - (mass_before_[i] + cdf_within(i, x)) / total_mass_;
}

double TargetDensity::quantile(double p) const {
  if (!(p >= 0.0 && p < 1.0)) throw std::domain_error("quantile: p must lie in [0, 1), got " + format_double(p));
  if (p == 0.0) return 0.0;
  const double w = p * total_mass_;
  std::size_t i = static_cast<std::size_t>(
                      std::upper_bound(mass_before_.begin(), mass_before_.end(), w) - mass_before_.begin()) -
                  1;
  const NodeTable& tab = tables_[i];
  const Segment& s = segments_[i];
  constexpr int kDigits = 50;
  boost::uintmax_t iters = 200;

  if (!std::isinf(s.upper)) {
    const double local = std::clamp(w - mass_before_[i], 0.0, tab.mass.back());
    auto it = std::upper_bound(tab.mass.begin(), tab.mass.end(), local);
    std::size_t k = static_cast<std::size_t>(it - tab.mass.begin());
    k = std::clamp<std::size_t>(k, 1, tab.x.size() - 1) - 1;
    const double lo = tab.x[k];
    const double hi = tab.x[k + 1];
    const double need = local - tab.mass[k];
    auto fn = [&](double x) {
      return std::make_pair(segment_integral(i, lo, x) - need, pdf_on_segment(i, x));
    };
    const double span = tab.mass[k + 1] - tab.mass[k];
    const double guess = span > 0.0 ? lo + (hi - lo) * std::clamp(need / span, 0.0, 1.0) : lo;
    return boost::math::tools::newton_raphson_iterate(fn, guess, lo, hi, kDigits, iters);
  }

  const double above = std::max((1.0 - p) * total_mass_, 0.0);
  // tab.mass is decreasing; find the last node whose tail mass is >= above.
  std::size_t k = 0;
  while (k + 1 < tab.x.size() && tab.mass[k + 1] >= above) ++k;
  if (k + 1 < tab.x.size()) {
    const double lo = tab.x[k];
    const double hi = tab.x[k + 1];
    const double need = above - tab.mass[k + 1];
    auto fn = [&](double x) {
      return std::make_pair(segment_integral(i, x, hi) - need, -pdf_on_segment(i, x));
    };
    const double span = tab.mass[k] - tab.mass[k + 1];
    const double guess = span > 0.0 ? hi - (hi - lo) * std::clamp(need / span, 0.0, 1.0) : lo;
    return boost::math::tools::newton_raphson_iterate(fn, guess, lo, hi, kDigits, iters);
  }
  // Beyond the last node: bracket by doubling, then solve in log x.
  double lo = tab.x.back();
  double hi = 2.0 * lo;
  while (segment_tail_integral(i, hi) > above) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return lo;
  }
  auto fn = [&](double y) {
    const double x = std::exp(y);
    return std::make_pair(segment_tail_integral(i, x) - above, -pdf_on_segment(i, x) * x);
  };
  const double y = boost::math::tools::newton_raphson_iterate(fn, 0.5 * (std::log(lo) + std::log(hi)), std::log(lo),
                                                              std::log(hi), kDigits, iters);
  return std::exp(y);
}

NearZeroCheck TargetDensity::check_near_zero(double x_min, double x_max, double bound) const {
  NearZeroCheck out;
  constexpr int kPoints = 40;
  const double l0 = std::log(x_min);
  const double l1 = std::log(x_max);
  for (int k = 0; k <= kPoints; ++k) {
    const double x = std::exp(l0 + (l1 - l0) * k / kPoints);
    out.sup_ratio = std::max(out.sup_ratio, cdf(x) / (x * pdf(x)));
  }
  out.bounded = out.sup_ratio <= bound;
  std::ostringstream os;
  os << "sup F(x)/(x pi(x)) over [" << x_min << ", " << x_max << "] = " << out.sup_ratio;
  if (!out.bounded) os << " exceeds " << bound << "; the process may drift towards 0";
  out.message = os.str();
  return out;
}

}  // namespace llmc
