#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "llmc_cli/commands.hpp"

namespace {

using namespace llmc::cli;

struct Common {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  unsigned workers = 0;
  bool print_defaults = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_config) {
  if (with_config) cmd->add_option("--config", c.config, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--workers", c.workers, "worker threads, 0 = all cores")->capture_default_str();
  cmd->add_flag("--print-defaults", c.print_defaults, "print the resolved config and exit");
  cmd->add_flag("-q,--quiet", c.quiet, "no progress output");
}

CommandOptions options_from(const CLI::App* cmd, const Common& c) {
  CommandOptions o;
  o.out_dir = c.out;
  if (cmd->count("--seed")) o.seed = c.seed;
  if (cmd->count("--workers")) o.workers = c.workers;
  o.log = c.quiet ? nullptr : &std::cerr;
  return o;
}

int print_config(const std::string& path, const CommandOptions& o) {
  try {
    RunConfig cfg = path.empty() ? RunConfig{} : load_config(path);
    std::cout << to_ini(apply_overrides(cfg, o));
    return exit_ok;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_usage;
  }
}

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  std::string t = text;
  for (char& ch : t) {
    if (ch == ',') ch = ' ';
  }
  std::istringstream is(t);
  std::string item;
  while (is >> item) {
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw ConfigError("bad level '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"llmc: sampling heavy-tailed targets with a pure-jump Langevin process"};
  app.require_subcommand(1);

  Common sample_opts;
  auto* sample = app.add_subcommand("sample", "simulate an ensemble from a config file");
  add_common(sample, sample_opts, true);

  Common example_opts;
  int example_id = 3;
  std::string noise = "heavy";
  auto* example = app.add_subcommand("example", "run one of the four built-in examples");
  example->add_option("id", example_id, "example id 1..4")->required();
  example->add_option("noise", noise, "heavy or exponential")->capture_default_str();
  add_common(example, example_opts, false);

  Common check_opts;
  auto* check = app.add_subcommand("check", "grid checks of the ergodicity conditions");
  add_common(check, check_opts, true);

  Common trunc_opts;
  std::string levels_text;
  auto* trunc = app.add_subcommand("truncation", "coupled small-jump truncation experiment");
  add_common(trunc, trunc_opts, true);
  trunc->add_option("--levels", levels_text, "increasing truncation levels, e.g. 2,8,32,128");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  if (sample->parsed()) {
    const CommandOptions o = options_from(sample, sample_opts);
    if (sample_opts.print_defaults) return print_config(sample_opts.config, o);
    return cmd_sample(sample_opts.config, o, std::cerr);
  }
  if (example->parsed()) {
    const CommandOptions o = options_from(example, example_opts);
    if (example_opts.print_defaults) {
      try {
        std::cout << to_ini(apply_overrides(example_config(example_id, noise == "exponential"), o));
        return exit_ok;
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_usage;
      }
    }
    return cmd_example(example_id, noise, o, std::cerr);
  }
  if (check->parsed()) {
    const CommandOptions o = options_from(check, check_opts);
    if (check_opts.print_defaults) return print_config(check_opts.config, o);
    return cmd_check(check_opts.config, o, std::cerr);
  }
  const CommandOptions o = options_from(trunc, trunc_opts);
  if (trunc_opts.print_defaults) return print_config(trunc_opts.config, o);
  std::optional<std::vector<int>> levels;
  if (trunc->count("--levels")) {
    try {
      levels = parse_levels(levels_text);
    } catch (const std::exception& e) {
      std::cerr << "usage error: " << e.what() << "\n";
      return exit_usage;
    }
  }
  return cmd_truncation(trunc_opts.config, levels, o, std::cerr);
}
