#include "llmc_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "llmc/format.hpp"

namespace llmc::cli {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  const auto d = parse_double(v);
  if (!d) throw std::invalid_argument("expected a number, got '" + v + "'");
  return *d;
}

long long to_integer(const std::string& v) {
  const double d = to_double(v);
  if (d != std::floor(d) || std::abs(d) > 9e15) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return static_cast<long long>(d);
}

std::size_t to_count(const std::string& v) {
  const long long n = to_integer(v);
  if (n < 0) throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(n);
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const std::string t = trim(v);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    throw std::invalid_argument("expected an unsigned 64-bit integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& v) {
  std::string t = v;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream is(t);
  std::vector<double> out;
  std::string item;
  while (is >> item) out.push_back(to_double(item));
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? " " : "") + format_double(xs[i]);
  return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Field {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  std::function<bool(const RunConfig&)> relevant = [](const RunConfig&) { return true; };
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto num = [&f](std::string s, std::string k, auto member) {
      f.push_back({s, k, [member](RunConfig& c, const std::string& v) { member(c) = to_double(v); },
                   [member](const RunConfig& c) { return format_double(member(const_cast<RunConfig&>(c))); }});
    };
    auto count = [&f](std::string s, std::string k, auto member) {
      f.push_back({s, k, [member](RunConfig& c, const std::string& v) { member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_count(v)); },
                   [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }});
    };
    auto flag = [&f](std::string s, std::string k, auto member) {
      f.push_back({s, k, [member](RunConfig& c, const std::string& v) { member(c) = to_bool(v); },
                   [member](const RunConfig& c) { return bool_text(member(const_cast<RunConfig&>(c))); }});
    };

    f.push_back({"target", "builtin",
                 [](RunConfig& c, const std::string& v) {
                   c.target.builtin = trim(v);
                   c.target.segments.clear();
                 },
                 [](const RunConfig& c) { return c.target.builtin; },
                 [](const RunConfig& c) { return !c.target.builtin.empty(); }});
    f.push_back({"target", "segments",
                 [](RunConfig& c, const std::string& v) {
                   c.target.segments = parse_segments(v);
                   c.target.builtin.clear();
                 },
                 [](const RunConfig& c) { return format_segments(c.target.segments); },
                 [](const RunConfig& c) { return c.target.builtin.empty(); }});

    f.push_back({"jump", "family", [](RunConfig& c, const std::string& v) { c.jump.family = trim(v); },
                 [](const RunConfig& c) { return c.jump.family; }});
    auto jnum = [&f](std::string k, double JumpSpec::*m, std::initializer_list<const char*> fams) {
      std::vector<const char*> names(fams);
      f.push_back({"jump", k, [m](RunConfig& c, const std::string& v) { c.jump.*m = to_double(v); },
                   [m](const RunConfig& c) { return format_double(c.jump.*m); },
                   [names](const RunConfig& c) {
                     return std::any_of(names.begin(), names.end(), [&](const char* n) { return c.jump.family == n; });
                   }});
    };
    jnum("alpha", &JumpSpec::alpha, {"weibull", "lomax"});
    jnum("beta", &JumpSpec::beta, {"weibull"});
    jnum("m", &JumpSpec::m, {"lognormal"});
    jnum("sigma", &JumpSpec::sigma, {"lognormal"});
    jnum("rate", &JumpSpec::rate, {"exponential"});

    num("drift", "exact_tol", [](RunConfig& c) -> double& { return c.drift.exact_tol; });
    num("drift", "rel_tol", [](RunConfig& c) -> double& { return c.drift.rel_tol; });
    f.push_back({"drift", "cache_nodes_per_decade",
                 [](RunConfig& c, const std::string& v) { c.drift.cache_nodes_per_decade = static_cast<int>(to_integer(v)); },
                 [](const RunConfig& c) { return std::to_string(c.drift.cache_nodes_per_decade); }});
    num("drift", "x_lo", [](RunConfig& c) -> double& { return c.drift.x_lo; });
    num("drift", "x_max", [](RunConfig& c) -> double& { return c.drift.x_max; });

    num("sim", "x0", [](RunConfig& c) -> double& { return c.sim.x0; });
    num("sim", "T", [](RunConfig& c) -> double& { return c.sim.T; });
    f.push_back({"sim", "n_paths",
                 [](RunConfig& c, const std::string& v) {
                   const long long n = to_integer(v);
                   if (n < 1) throw std::invalid_argument("must be >= 1, got " + trim(v));
                   c.sim.n_paths = static_cast<std::size_t>(n);
                 },
                 [](const RunConfig& c) { return std::to_string(c.sim.n_paths); }});
    f.push_back({"sim", "master_seed", [](RunConfig& c, const std::string& v) { c.sim.master_seed = to_u64(v); },
                 [](const RunConfig& c) { return std::to_string(c.sim.master_seed); }});
    num("sim", "ode_rel_tol", [](RunConfig& c) -> double& { return c.sim.ode_rel_tol; });
    num("sim", "ode_abs_tol", [](RunConfig& c) -> double& { return c.sim.ode_abs_tol; });
    num("sim", "x_floor", [](RunConfig& c) -> double& { return c.sim.x_floor; });
    f.push_back({"sim", "record_mode",
                 [](RunConfig& c, const std::string& v) { c.sim.record_mode = parse_record_mode(trim(v)); },
                 [](const RunConfig& c) { return std::string(to_string(c.sim.record_mode)); }});

    count("output", "bins", [](RunConfig& c) -> std::size_t& { return c.output.bins; });
    flag("output", "log_bins", [](RunConfig& c) -> bool& { return c.output.log_bins; });
    num("output", "hist_lo", [](RunConfig& c) -> double& { return c.output.hist_lo; });
    num("output", "hist_hi", [](RunConfig& c) -> double& { return c.output.hist_hi; });
    flag("output", "svg", [](RunConfig& c) -> bool& { return c.output.svg; });
    flag("output", "drift_csv", [](RunConfig& c) -> bool& { return c.output.drift_csv; });

    f.push_back({"diagnostics", "thresholds",
                 [](RunConfig& c, const std::string& v) { c.diagnostics.thresholds = to_doubles(v); },
                 [](const RunConfig& c) { return join(c.diagnostics.thresholds); }});
    count("diagnostics", "hill_k", [](RunConfig& c) -> std::size_t& { return c.diagnostics.hill_k; });
    num("diagnostics", "ks_gate", [](RunConfig& c) -> double& { return c.diagnostics.ks_gate; });
    num("diagnostics", "residual_gate", [](RunConfig& c) -> double& { return c.diagnostics.residual_gate; });
    num("diagnostics", "chi_square_alpha", [](RunConfig& c) -> double& { return c.diagnostics.chi_square_alpha; });

    num("check", "x_min", [](RunConfig& c) -> double& { return c.check.x_min; });
    num("check", "x_max", [](RunConfig& c) -> double& { return c.check.x_max; });
    f.push_back({"check", "points_per_decade",
                 [](RunConfig& c, const std::string& v) { c.check.points_per_decade = static_cast<int>(to_integer(v)); },
                 [](const RunConfig& c) { return std::to_string(c.check.points_per_decade); }});
    num("check", "slack", [](RunConfig& c) -> double& { return c.check.slack; });
    num("check", "hazard_eps", [](RunConfig& c) -> double& { return c.check.hazard_eps; });
    num("check", "index_tol", [](RunConfig& c) -> double& { return c.check.index_tol; });

    f.push_back({"truncation", "levels",
                 [](RunConfig& c, const std::string& v) {
                   c.truncation.levels.clear();
                   for (double d : to_doubles(v)) {
                     if (d != std::floor(d)) throw std::invalid_argument("levels must be integers");
                     c.truncation.levels.push_back(static_cast<int>(d));
                   }
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.truncation.levels.size(); ++i) {
                     out += (i ? " " : "") + std::to_string(c.truncation.levels[i]);
                   }
                   return out;
                 }});
    count("truncation", "grid_points", [](RunConfig& c) -> std::size_t& { return c.truncation.grid_points; });
    return f;
  }();
  return table;
}

}  // namespace

TargetDensity TargetSpec::build() const {
  if (!builtin.empty()) return TargetDensity::builtin(builtin);
  return TargetDensity::build(segments, "custom");
}

JumpDistribution JumpSpec::build() const {
  switch (parse_jump_family(family)) {
    case JumpFamily::weibull: return JumpDistribution::weibull(alpha, beta);
    case JumpFamily::lognormal: return JumpDistribution::lognormal(m, sigma);
    case JumpFamily::lomax: return JumpDistribution::lomax(alpha);
    case JumpFamily::exponential: return JumpDistribution::exponential(rate);
  }
  throw std::invalid_argument("unknown jump family");
}

void RunConfig::validate() const {
  auto guard = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("[") + section + "] " + e.what());
    }
  };
  guard("target", [&] { (void)target.build(); });
  guard("jump", [&] { (void)jump.build(); });
  guard("drift", [&] { drift.validate(); });
  guard("sim", [&] { sim.validate(); });
  guard("output", [&] {
    if (output.bins < 2) throw std::invalid_argument("bins must be >= 2");
    if (!(output.hist_hi > output.hist_lo) && !(output.hist_lo == 0.0 && output.hist_hi == 0.0)) {
      throw std::invalid_argument("need hist_lo < hist_hi (or both 0 for the sample range)");
    }
    if (output.log_bins && !(output.hist_lo > 0.0) && !(output.hist_lo == 0.0 && output.hist_hi == 0.0)) {
      throw std::invalid_argument("log_bins needs hist_lo > 0");
    }
  });
  guard("diagnostics", [&] {
    for (std::size_t i = 0; i < diagnostics.thresholds.size(); ++i) {
      if (!(diagnostics.thresholds[i] > 0.0) || (i > 0 && diagnostics.thresholds[i] <= diagnostics.thresholds[i - 1])) {
        throw std::invalid_argument("thresholds must be positive and increasing");
      }
    }
    if (diagnostics.hill_k != 0 && diagnostics.hill_k < 10) throw std::invalid_argument("hill_k must be 0 or >= 10");
    if (!(diagnostics.chi_square_alpha > 0.0 && diagnostics.chi_square_alpha < 1.0)) {
      throw std::invalid_argument("chi_square_alpha must lie in (0, 1)");
    }
  });
  guard("check", [&] { check.validate(); });
  guard("truncation", [&] {
    if (truncation.levels.empty()) throw std::invalid_argument("levels must not be empty");
    for (std::size_t i = 0; i < truncation.levels.size(); ++i) {
      if (truncation.levels[i] < 0) throw std::invalid_argument("levels must be >= 0");
      if (i > 0 && truncation.levels[i] <= truncation.levels[i - 1]) {
        throw std::invalid_argument("levels must be strictly increasing");
      }
    }
    if (truncation.grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");
  });
}

RunConfig parse_config(std::istream& in, const std::string& origin) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  RunConfig cfg;
  std::set<std::string> seen;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(origin + ": key '" + section + "' must be inside a [section]");
    }
    for (const auto& [key, value] : body) {
      const auto& table = fields();
      const auto it = std::find_if(table.begin(), table.end(),
                                   [&](const Field& f) { return f.section == section && f.key == key; });
      if (it == table.end()) throw ConfigError(origin + ": unknown key " + section + "." + key);
      try {
        it->set(cfg, value.data());
      } catch (const std::exception& e) {
        throw ConfigError(origin + ": " + section + "." + key + ": " + e.what());
      }
      seen.insert(section + "." + key);
    }
  }
  for (const Field& f : fields()) {
    if (seen.count(f.section + "." + f.key) && !f.relevant(cfg)) {
      throw ConfigError(origin + ": " + f.section + "." + f.key + " does not apply to this configuration");
    }
  }
  if (seen.count("target.builtin") && seen.count("target.segments")) {
    throw ConfigError(origin + ": give either target.builtin or target.segments, not both");
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  return parse_config(in, path);
}

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& n : cfg.notes) os << "# " << n << "\n";
  std::string section;
  for (const Field& f : fields()) {
    if (!f.relevant(cfg)) continue;
    if (f.section != section) {
      os << (section.empty() ? "" : "\n") << "[" << f.section << "]\n";
      section = f.section;
    }
    os << f.key << " = " << f.get(cfg) << "\n";
  }
  return os.str();
}

std::string format_segments(const std::vector<Segment>& segments) {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    out += (i ? "; " : "") + format_double(s.lower) + " " + (std::isinf(s.upper) ? "inf" : format_double(s.upper)) +
           " " + to_string(s.form);
  }
  return out;
}

std::vector<Segment> parse_segments(const std::string& text) {
  std::vector<Segment> out;
  std::istringstream all(text);
  std::string item;
  while (std::getline(all, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream is(item);
    std::string lo;
    std::string hi;
    is >> lo >> hi;
    std::string rest;
    std::getline(is, rest);
    if (lo.empty() || hi.empty() || trim(rest).empty()) {
      throw std::invalid_argument("segment '" + item + "' must read 'lower upper form(args)'");
    }
    Segment s;
    s.lower = to_double(lo);
    s.upper = hi == "inf" ? std::numeric_limits<double>::infinity() : to_double(hi);
    s.form = parse_form(trim(rest));
    out.push_back(s);
  }
  if (out.empty()) throw std::invalid_argument("no segments given");
  return out;
}

RunConfig example_config(int id, bool exponential_noise) {
  if (id < 1 || id > 4) throw ConfigError("example id must be 1, 2, 3 or 4, got " + std::to_string(id));
  RunConfig cfg;
  cfg.target.builtin = "f" + std::to_string(id);
  cfg.sim.T = 15.0;
  cfg.sim.n_paths = 30000;
  cfg.sim.x0 = 1.0;
  cfg.notes.push_back("example " + std::to_string(id) + (exponential_noise ? " with exponential noise" : " with heavy-tailed noise"));
  if (exponential_noise) {
    cfg.jump = JumpSpec{};
    cfg.jump.family = "exponential";
    cfg.jump.rate = 1.0;
    cfg.notes.push_back("exponential baseline rate 1 (rate not fixed by the source experiments)");
  } else if (id == 1) {
    cfg.jump.family = "weibull";
    cfg.jump.alpha = 0.5;
    cfg.jump.beta = 1.0;
  } else if (id == 2) {
    cfg.jump.family = "lognormal";
    cfg.jump.m = 0.0;
    cfg.jump.sigma = 2.0;
    cfg.notes.push_back("lognormal jumps m = 0, sigma^2 = 4 against the target tail with sigma^2 = 2");
  } else {
    cfg.jump.family = "lomax";
    cfg.jump.alpha = 1.0;
  }
  cfg.notes.push_back("initial state x0 = 1");
  return cfg;
}

}  // namespace llmc::cli
