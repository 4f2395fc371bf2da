#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kcel/commands.hpp"

namespace {

struct Overrides {
  std::optional<std::int64_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> cache;
  std::optional<std::string> output;
  std::optional<std::int64_t> steps;
  std::optional<double> dt;
  std::optional<int> workers;
};

kcel::RunConfig load_config(const std::string& path, const Overrides& o) {
  kcel::RunConfig cfg = kcel::RunConfig::load(path);
  if (o.samples) cfg.samples_per_pair = *o.samples;
  if (o.seed) cfg.seed = *o.seed;
  if (o.cache) cfg.cache = *o.cache;
  if (o.output) cfg.output = *o.output;
  if (o.steps) cfg.steps = *o.steps;
  if (o.dt) cfg.dt = *o.dt;
  if (o.workers) cfg.workers = *o.workers;
  cfg.validate();
  return cfg;
}

void add_config_flags(CLI::App* cmd, std::string& config, Overrides& o, bool run_flags) {
  cmd->add_option("-c,--config", config, "run configuration (INI)")->required();
  cmd->add_option("--samples", o.samples, "override mc.samples_per_pair");
  cmd->add_option("--seed", o.seed, "override mc.seed");
  cmd->add_option("--cache", o.cache, "override paths.cache");
  cmd->add_option("--workers", o.workers, "override mc.workers");
  if (run_flags) {
    cmd->add_option("--output", o.output, "override paths.output");
    cmd->add_option("--steps", o.steps, "override run.steps");
    cmd->add_option("--dt", o.dt, "override run.dt");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Macroscopic kinetic model: precompute coefficient tensors and integrate the moment system"};
  app.require_subcommand(1);

  std::string config;
  Overrides o;
  auto* pre = app.add_subcommand("precompute", "build duals, drift and collision tensors and write the cache");
  add_config_flags(pre, config, o, false);
  auto* run = app.add_subcommand("run", "integrate the system from the cache and write CSV plus a conservation report");
  add_config_flags(run, config, o, true);
  auto* val = app.add_subcommand("validate", "run the invariant suite on the cache");
  add_config_flags(val, config, o, false);
  auto* mom = app.add_subcommand("moments", "convert a raw N_<alpha>_<j> CSV into macroscopic fields");
  std::string input, output;
  mom->add_option("input", input, "CSV with N_<alpha>_<j> columns")->required();
  mom->add_option("-o,--output", output, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kcel::kExitValidation;
  }

  try {
    if (*pre) {
      kcel::cmd_precompute(load_config(config, o), std::cout);
    } else if (*run) {
      kcel::cmd_run(load_config(config, o), std::cout);
    } else if (*val) {
      const auto rep = kcel::cmd_validate(load_config(config, o), std::cout);
      if (!rep.all_pass()) {
        std::cerr << "validation failed\n";
        return kcel::kExitValidation;
      }
    } else if (*mom) {
      kcel::cmd_moments(input, output);
    }
  } catch (const kcel::Error& e) {
    std::cerr << "kcel: " << e.what() << "\n";
    return kcel::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "kcel: " << e.what() << "\n";
    return kcel::kExitIo;
  }
  return kcel::kExitOk;
}
