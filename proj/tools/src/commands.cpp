#include "llmc_cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "llmc/format.hpp"
#include "llmc_cli/svg.hpp"

namespace llmc::cli {
namespace {

DiagnosticsOptions diagnostics_options(const RunConfig& cfg) {
  DiagnosticsOptions d = cfg.diagnostics;
  d.bins = cfg.output.bins;
  d.log_scale = cfg.output.log_bins;
  d.hist_lo = cfg.output.hist_lo;
  d.hist_hi = cfg.output.hist_hi;
  return d;
}

std::string histogram_csv(const Histogram& h, const TargetDensity& target) {
  const double lo = h.edges.front();
  const double hi = h.edges.back();
  const double mass = target.cdf(hi) - (lo > 0.0 ? target.cdf(lo) : 0.0);
  std::string out = "bin_left,bin_right,count,density,pdf\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double a = h.edges[i];
    const double b = h.edges[i + 1];
    const double mid = h.log_scale ? std::sqrt(a * b) : 0.5 * (a + b);
    const double pdf = mass > 0.0 ? target.pdf(mid) / mass : 0.0;
    out += format_double(a) + "," + format_double(b) + "," + std::to_string(h.counts[i]) + "," +
           format_double(h.density[i]) + "," + format_double(pdf) + "\n";
  }
  return out;
}

std::string skeleton_csv(const SampleSet& s) {
  std::string out = "path_index,t,x\n";
  for (std::size_t i = 0; i < s.paths.size(); ++i) {
    for (const auto& p : s.paths[i].skeleton) {
      out += std::to_string(i) + "," + format_double(p.t) + "," + format_double(p.x) + "\n";
    }
  }
  return out;
}

std::string kv_line(const std::string& k, const std::string& v) { return k + "=" + v + "\n"; }

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_usage;
  } catch (const SimulationError& e) {
    err << "simulation failed: " << e.what() << "\n";
    return exit_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_failure;
  }
}

RunConfig load_checked(const std::string& path, const CommandOptions& opts) {
  if (path.empty()) throw ConfigError("--config is required");
  RunConfig cfg = apply_overrides(load_config(path), opts);
  cfg.validate();
  return cfg;
}

}  // namespace

std::string samples_csv(const SampleSet& s) {
  std::string out = "path_index,terminal,jump_count\n";
  out.reserve(s.terminals.size() * 28);
  for (std::size_t i = 0; i < s.terminals.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(s.terminals[i]);
    out += ',';
    out += std::to_string(s.jump_counts[i]);
    out += '\n';
  }
  return out;
}

RunConfig apply_overrides(RunConfig cfg, const CommandOptions& opts) {
  if (opts.seed) cfg.sim.master_seed = *opts.seed;
  if (opts.workers) cfg.sim.workers = *opts.workers;
  return cfg;
}

Artifacts sample_artifacts(const RunConfig& cfg, std::ostream* log) {
  const TargetDensity target = cfg.target.build();
  const JumpDistribution jump = cfg.jump.build();
  DriftField field(target, jump, cfg.drift);
  if (log) {
    const CacheStats st = field.stats();
    *log << "drift cache: " << st.cells << " cells, " << st.exact_cells << " exact\n";
  }
  const SampleSet samples = simulate_ensemble(field, cfg.sim);
  if (log) {
    *log << "simulated " << samples.terminals.size() << " paths in " << samples.wall_seconds << " s on "
         << samples.workers_used << " workers\n";
  }
  const DiagnosticsReport report = diagnose(samples, field, diagnostics_options(cfg));
  const NearZeroCheck near_zero = target.check_near_zero();

  Artifacts out;
  out["samples.csv"] = samples_csv(samples);
  out["histogram.csv"] = histogram_csv(report.histogram, target);

  std::ostringstream txt;
  txt << "# config\n" << to_ini(cfg) << "\n";
  txt << "# run\n";
  txt << "target " << target.name() << ", jump " << jump.describe() << "\n";
  const CacheStats st = field.stats();
  txt << "drift cache cells " << st.cells << ", exact cells " << st.exact_cells << "\n";
  txt << "ode steps " << samples.ode_steps << "\n";
  if (!near_zero.bounded) txt << "warning: " << near_zero.message << "\n";
  txt << "\n" << report.to_text();
  out["report.txt"] = txt.str();

  std::string kv = kv_line("target", target.name()) + kv_line("jump", jump.describe()) +
                   kv_line("master_seed", std::to_string(cfg.sim.master_seed)) +
                   kv_line("T", format_double(cfg.sim.T)) + kv_line("x0", format_double(cfg.sim.x0)) +
                   kv_line("ode_steps", std::to_string(samples.ode_steps)) +
                   kv_line("cache_cells", std::to_string(st.cells)) +
                   kv_line("near_zero_bounded", near_zero.bounded ? "true" : "false");
  out["report.kv"] = kv + report.to_kv();

  if (cfg.output.svg) {
    out["figure.svg"] = render_histogram_svg(out["histogram.csv"], target.name() + " / " + jump.describe());
  }
  if (cfg.output.drift_csv) {
    std::ostringstream d;
    field.dump_csv(d, std::max(cfg.drift.x_lo, 1e-3), cfg.drift.x_max, 601);
    out["drift.csv"] = d.str();
  }
  if (cfg.sim.record_mode == RecordMode::full_path) out["skeleton.csv"] = skeleton_csv(samples);
  return out;
}

Artifacts check_artifacts(const RunConfig& cfg, int& exit_code) {
  const ConditionReport report =
      check_theorem_conditions(cfg.jump.build(), cfg.target.build(), cfg.check);
  switch (report.overall()) {
    case Verdict::pass: exit_code = exit_ok; break;
    case Verdict::inconclusive: exit_code = exit_inconclusive; break;
    case Verdict::fail: exit_code = exit_failure; break;
  }
  Artifacts out;
  out["report.txt"] = "# config\n" + to_ini(cfg) + "\n" + report.to_text();
  out["report.json"] = report.to_json();
  return out;
}

Artifacts truncation_artifacts(const RunConfig& cfg, std::ostream* log) {
  DriftField field(cfg.target.build(), cfg.jump.build(), cfg.drift);
  const TruncationTable table =
      simulate_coupled_truncation(field, cfg.sim, cfg.truncation.levels, cfg.truncation.grid_points);
  std::string csv = "level,max_sup,mean_sup\n";
  for (const auto& r : table.rows) {
    csv += std::to_string(r.level) + "," + format_double(r.max_sup) + "," + format_double(r.mean_sup) + "\n";
    if (log) *log << "n=" << r.level << "  max " << r.max_sup << "  mean " << r.mean_sup << "\n";
  }
  Artifacts out;
  out["truncation.csv"] = csv;
  out["report.txt"] = "# config\n" + to_ini(cfg);
  return out;
}

void write_artifacts(const Artifacts& files, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  for (const auto& [name, content] : files) {
    const fs::path p = fs::path(out_dir) / name;
    std::ofstream os(p, std::ios::binary);
    os << content;
    if (!os) throw std::runtime_error("cannot write " + p.string());
  }
}

int cmd_sample(const std::string& config_path, const CommandOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_checked(config_path, opts);
    write_artifacts(sample_artifacts(cfg, opts.log), opts.out_dir);
    return int{exit_ok};
  });
}

int cmd_example(int id, const std::string& noise, const CommandOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    if (noise != "heavy" && noise != "exponential") {
      throw ConfigError("noise must be heavy or exponential, got '" + noise + "'");
    }
    const RunConfig cfg = apply_overrides(example_config(id, noise == "exponential"), opts);
    cfg.validate();
    write_artifacts(sample_artifacts(cfg, opts.log), opts.out_dir);
    return int{exit_ok};
  });
}

int cmd_check(const std::string& config_path, const CommandOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_checked(config_path, opts);
    int code = exit_ok;
    const Artifacts files = check_artifacts(cfg, code);
    write_artifacts(files, opts.out_dir);
    if (opts.log) *opts.log << files.at("report.txt");
    return code;
  });
}

int cmd_truncation(const std::string& config_path, const std::optional<std::vector<int>>& levels,
                   const CommandOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = load_checked(config_path, opts);
    if (levels) {
      cfg.truncation.levels = *levels;
      cfg.validate();
    }
    write_artifacts(truncation_artifacts(cfg, opts.log), opts.out_dir);
    return int{exit_ok};
  });
}

}  // namespace llmc::cli
