#include "llmc/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "llmc/format.hpp"
#include "llmc/rng.hpp"

namespace llmc {
namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                 b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

unsigned resolve_workers(unsigned requested, std::size_t items) {
  unsigned w = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(items, 1)));
}

// Runs body(worker, index) for index in [0, n) on `workers` threads. The
// first exception by index is rethrown after all threads finish.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body body) {
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = std::numeric_limits<std::size_t>::max();
  std::size_t failures = 0;
  std::string err_text;
  auto run = [&](unsigned worker) {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(worker, i);
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mutex);
        ++failures;
        if (i < err_index) {
          err_index = i;
          err_text = e.what();
        }
      }
    }
  };
  if (workers <= 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (auto& t : threads) t.join();
  }
  if (failures > 0) {
    throw SimulationError(std::to_string(failures) + " of " + std::to_string(n) + " paths failed; first: " + err_text);
  }
}

Path run_path(FlowIntegrator& integ, const JumpDistribution& jump, const SimulationConfig& cfg, std::size_t index) {
  RngStream rng(cfg.master_seed, index);
  const bool full = cfg.record_mode == RecordMode::full_path;
  Path path;
  double t = 0.0;
  double x = cfg.x0;
  const std::size_t clamps0 = integ.stats().clamp_events;
  const std::size_t steps0 = integ.stats().steps;
  if (full) path.skeleton.push_back({0.0, x});
  try {
    while (true) {
      const double gap = rng.exponential();
      if (t + gap > cfg.T) {
        x = integ.advance(x, cfg.T - t, full ? &path.skeleton : nullptr, t);
        t = cfg.T;
        break;
      }
      x = integ.advance(x, gap, full ? &path.skeleton : nullptr, t);
      t += gap;
      const double xi = jump.sample(rng);
      if (full && (path.skeleton.back().t != t || path.skeleton.back().x != x)) path.skeleton.push_back({t, x});
      x += xi;
      path.jump_times.push_back(t);
      path.jump_sizes.push_back(xi);
      if (full) path.skeleton.push_back({t, x});
    }
  } catch (const std::exception& e) {
    std::ostringstream os;
    os << "path " << index << " at t = " << t << ", x = " << x << ": " << e.what();
    throw SimulationError(os.str());
  }
  path.terminal = x;
  path.clamp_events = integ.stats().clamp_events - clamps0;
  path.ode_steps = integ.stats().steps - steps0;
  return path;
}

}  // namespace

std::string_view to_string(RecordMode mode) noexcept {
  return mode == RecordMode::full_path ? "full_path" : "terminal_only";
}

RecordMode parse_record_mode(std::string_view text) {
  if (text == "terminal_only" || text == "terminal") return RecordMode::terminal_only;
  if (text == "full_path" || text == "full") return RecordMode::full_path;
  throw std::invalid_argument("record_mode must be terminal_only or full_path, got '" + std::string(text) + "'");
}

void SimulationConfig::validate() const {
  if (!(x0 > 0.0) || !std::isfinite(x0)) throw std::invalid_argument("sim.x0 must be > 0");
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("sim.T must be > 0");
  if (n_paths < 1) throw std::invalid_argument("sim.n_paths must be >= 1");
  if (!(ode_rel_tol > 0.0) || !(ode_abs_tol > 0.0)) throw std::invalid_argument("sim.ode_*_tol must be > 0");
  if (!(x_floor > 0.0) || !(x_floor < x0)) throw std::invalid_argument("sim.x_floor must lie in (0, x0)");
}

FlowIntegrator::FlowIntegrator(const DriftField& field, FlowTolerances tol)
    : field_(&field), eval_(field.evaluator()), tol_(tol) {}

double FlowIntegrator::rk_step(std::size_t piece, double y, double k1, double h, double& err, double& k_last) {
  auto f = [&](double u) { return eval_.on(piece, u); };
  const double k2 = f(y + h * a21 * k1);
  const double k3 = f(y + h * (a31 * k1 + a32 * k2));
  const double k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const double k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const double k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  const double y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  k_last = f(y5);
  err = std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k_last));
  return y5;
}

double FlowIntegrator::advance(double x, double dt, std::vector<SkeletonPoint>* skeleton, double t0) {
  if (!(x > 0.0)) throw SimulationError("flow: state must be > 0, got " + format_double(x));
  if (!(dt >= 0.0)) throw SimulationError("flow: dt must be >= 0");
  if (dt == 0.0) return x;
  const TargetDensity& target = field_->target();
  std::size_t piece = target.segment_index_left(x);
  double b = target.segments()[piece].lower;
  double y = x;
  double s = 0.0;
  double k1 = eval_.on(piece, y);
  double h = k1 < 0.0 ? std::min(dt, 0.1 * y / -k1) : dt;
  std::size_t steps = 0;

  auto record = [&](double time, double value) {
    if (skeleton == nullptr) return;
    if (!skeleton->empty() && skeleton->back().x == value && skeleton->back().t > t0) {
      skeleton->back().t = time;
    } else {
      skeleton->push_back({time, value});
    }
  };

  while (s < dt) {
    if (++steps > tol_.max_steps) {
      throw SimulationError("flow: step limit exceeded from x = " + format_double(x) + " over dt = " +
                            format_double(dt));
    }
    const double remaining = dt - s;
    bool last = false;
    if (h >= remaining * (1.0 - 1e-12)) {
      h = remaining;
      last = true;
    }
    double err = 0.0;
    double k_last = 0.0;
    const double y_new = rk_step(piece, y, k1, h, err, k_last);
    const double scale = tol_.abs_tol + tol_.rel_tol * std::max(std::abs(y), std::abs(y_new));
    const double ratio = err / scale;
    if (!(ratio <= 1.0) || !std::isfinite(y_new)) {
      ++stats_.rejected;
      h *= std::isfinite(ratio) ? std::max(0.1, 0.9 * std::pow(ratio, -0.2)) : 0.1;
      if (h < 1e-14 * std::max(1.0, dt)) {
        throw SimulationError("flow: step size underflow at x = " + format_double(y) + " (start " +
                              format_double(x) + ", dt " + format_double(dt) + ")");
      }
      continue;
    }
    ++stats_.steps;
    if (piece > 0 && y_new <= b) {
      // Locate the crossing of the lower breakpoint by bisection on the step.
      double lo = 0.0;
      double hi = h;
      double y_lo = y;
      const double band = 1e-12 * std::max(1.0, b);
      for (int it = 0; it < 200 && y_lo - b > band; ++it) {
        const double mid = 0.5 * (lo + hi);
        double e = 0.0;
        double kl = 0.0;
        const double ym = rk_step(piece, y, k1, mid, e, kl);
        if (ym > b) {
          lo = mid;
          y_lo = ym;
        } else {
          hi = mid;
        }
        if (!(hi - lo > 0.0)) break;
      }
      s += lo;
      y = b;
      --piece;
      b = target.segments()[piece].lower;
      k1 = eval_.on(piece, y);
      ++stats_.breakpoint_crossings;
      record(t0 + s, y);
      continue;
    }
    s = last ? dt : s + h;
    y = y_new;
    k1 = k_last;
    if (y < tol_.x_floor) {
      y = tol_.x_floor;
      ++stats_.clamp_events;
      k1 = eval_.on(piece, y);
    }
    record(t0 + s, y);
    h *= std::min(5.0, std::max(0.2, ratio > 0.0 ? 0.9 * std::pow(ratio, -0.2) : 5.0));
  }
  return y;
}

double flow(const DriftField& field, double x, double dt, const FlowTolerances& tol, FlowStats* stats) {
  FlowIntegrator integ(field, tol);
  const double y = integ.advance(x, dt);
  if (stats != nullptr) *stats = integ.stats();
  return y;
}

Path simulate_path(const DriftField& field, const SimulationConfig& cfg, std::size_t path_index) {
  cfg.validate();
  if (path_index >= cfg.n_paths) throw std::out_of_range("path_index must be < n_paths");
  FlowIntegrator integ(field, cfg.tolerances());
  return run_path(integ, field.jump(), cfg, path_index);
}

SampleSet simulate_ensemble(const DriftField& field, const SimulationConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const unsigned workers = resolve_workers(cfg.workers, cfg.n_paths);
  const bool full = cfg.record_mode == RecordMode::full_path;
  SampleSet out;
  out.config = cfg;
  out.workers_used = workers;
  out.terminals.assign(cfg.n_paths, 0.0);
  out.jump_counts.assign(cfg.n_paths, 0);
  std::vector<std::size_t> clamps(cfg.n_paths, 0);
  std::vector<std::size_t> steps(cfg.n_paths, 0);
  std::vector<std::size_t> violations(cfg.n_paths, 0);
  if (full) out.paths.resize(cfg.n_paths);

  std::vector<std::unique_ptr<FlowIntegrator>> integrators;
  for (unsigned w = 0; w < workers; ++w) integrators.push_back(std::make_unique<FlowIntegrator>(field, cfg.tolerances()));

  parallel_for(cfg.n_paths, workers, [&](unsigned w, std::size_t i) {
    Path p = run_path(*integrators[w], field.jump(), cfg, i);
    out.terminals[i] = p.terminal;
    out.jump_counts[i] = static_cast<std::uint32_t>(p.jump_times.size());
    clamps[i] = p.clamp_events;
    steps[i] = p.ode_steps;
    if (full) {
      violations[i] = validate_path(p);
      out.paths[i] = std::move(p);
    }
  });
  for (std::size_t i = 0; i < cfg.n_paths; ++i) {
    out.clamp_events += clamps[i];
    out.ode_steps += steps[i];
    out.skeleton_violations += violations[i];
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::size_t validate_path(const Path& path) {
  std::size_t bad = 0;
  const auto& sk = path.skeleton;
  std::size_t next_jump = 0;
  for (std::size_t i = 0; i < sk.size(); ++i) {
    if (!(sk[i].x > 0.0) || !std::isfinite(sk[i].x)) ++bad;
    if (i == 0) continue;
    const SkeletonPoint& a = sk[i - 1];
    const SkeletonPoint& b = sk[i];
    if (b.t < a.t) {
      ++bad;
    } else if (next_jump < path.jump_times.size() && b.t == path.jump_times[next_jump] && a.t == b.t) {
      if (b.x != a.x + path.jump_sizes[next_jump]) ++bad;
      ++next_jump;
    } else if (!(b.x < a.x)) {
      ++bad;
    }
  }
  if (next_jump != path.jump_times.size()) bad += path.jump_times.size() - next_jump;
  return bad;
}

TruncationTable simulate_coupled_truncation(const DriftField& field, const SimulationConfig& cfg,
                                            std::span<const int> levels, std::size_t grid_points) {
  cfg.validate();
  if (levels.empty()) throw std::invalid_argument("truncation: levels must not be empty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0) throw std::invalid_argument("truncation: levels must be >= 0");
    if (i > 0 && levels[i] <= levels[i - 1]) throw std::invalid_argument("truncation: levels must be increasing");
  }
  if (grid_points < 2) throw std::invalid_argument("truncation: grid_points must be >= 2");

  std::vector<std::unique_ptr<DriftField>> owned;
  std::vector<const DriftField*> fields;
  for (int n : levels) {
    if (n == 0) {
      fields.push_back(&field);
      continue;
    }
    DriftOptions o = field.options();
    o.truncation = n;
    owned.push_back(std::make_unique<DriftField>(field.target(), field.jump(), o));
    fields.push_back(owned.back().get());
  }

  const unsigned workers = resolve_workers(cfg.workers, cfg.n_paths);
  std::vector<std::vector<std::unique_ptr<FlowIntegrator>>> integ(workers);
  for (unsigned w = 0; w < workers; ++w) {
    integ[w].push_back(std::make_unique<FlowIntegrator>(field, cfg.tolerances()));
    for (const DriftField* f : fields) integ[w].push_back(std::make_unique<FlowIntegrator>(*f, cfg.tolerances()));
  }
  std::vector<std::vector<double>> sup(levels.size(), std::vector<double>(cfg.n_paths, 0.0));

  parallel_for(cfg.n_paths, workers, [&](unsigned w, std::size_t i) {
    RngStream rng(cfg.master_seed, i);
    std::vector<double> times;
    std::vector<double> xis;
    double t = 0.0;
    while (true) {
      const double gap = rng.exponential();
      if (t + gap > cfg.T) break;
      t += gap;
      times.push_back(t);
      xis.push_back(field.jump().sample(rng));
    }
    // Checkpoints: grid times, then jumps; at equal times the grid comes first.
    struct Check {
      double t;
      int jump;  // -1 for a grid point
    };
    std::vector<Check> checks;
    for (std::size_t j = 0; j < grid_points; ++j) {
      checks.push_back({cfg.T * static_cast<double>(j) / static_cast<double>(grid_points - 1), -1});
    }
    for (std::size_t k = 0; k < times.size(); ++k) checks.push_back({times[k], static_cast<int>(k)});
    std::stable_sort(checks.begin(), checks.end(), [](const Check& a, const Check& b) {
      return a.t < b.t || (a.t == b.t && a.jump < b.jump);
    });
    auto trajectory = [&](FlowIntegrator& fi, double min_jump) {
      std::vector<double> values;
      values.reserve(checks.size() + times.size());
      double x = cfg.x0;
      double now = 0.0;
      for (const Check& c : checks) {
        x = fi.advance(x, c.t - now);
        now = c.t;
        values.push_back(x);
        if (c.jump >= 0) {
          x += std::max(xis[static_cast<std::size_t>(c.jump)], min_jump);
          values.push_back(x);
        }
      }
      return values;
    };
    const std::vector<double> base = trajectory(*integ[w][0], 0.0);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const double min_jump = levels[l] > 0 ? 1.0 / levels[l] : 0.0;
      const std::vector<double> v = trajectory(*integ[w][l + 1], min_jump);
      double m = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) m = std::max(m, std::abs(v[j] - base[j]));
      sup[l][i] = m;
    }
  });

  TruncationTable table;
  table.n_paths = cfg.n_paths;
  table.grid_points = grid_points;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    TruncationRow row;
    row.level = levels[l];
    double sum = 0.0;
    for (double v : sup[l]) {
      row.max_sup = std::max(row.max_sup, v);
      sum += v;
    }
    row.mean_sup = sum / static_cast<double>(cfg.n_paths);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace llmc
