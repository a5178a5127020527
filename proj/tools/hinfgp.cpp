// Command-line front end: hinfgp {identify|verify|sample} --config PATH [--seed N] [--out DIR]

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "hinfgp/experiment.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config (JSON)")->required();
  cmd->add_option("--seed", c.seed, "RNG seed; overrides the config");
  cmd->add_option("--out", c.out, "output directory; overrides the config");
}

hinfgp::RunContext context(const hinfgp::ExperimentConfig& cfg, const Common& c) {
  hinfgp::RunContext ctx;
  ctx.seed = c.seed.value_or(cfg.seed);
  ctx.config_hash = cfg.config_hash;
  ctx.out_dir = c.out.empty() ? cfg.output_dir : std::filesystem::path(c.out);
  return ctx;
}

int run(const std::string& command, const Common& c) {
  const hinfgp::ExperimentConfig cfg = hinfgp::load_config(c.config);
  const hinfgp::RunContext ctx = context(cfg, c);

  if (command == "identify") {
    if (!cfg.identify) throw hinfgp::ConfigError("config has no 'identify' section");
    const auto r = hinfgp::run_identify(*cfg.identify, ctx);
    std::cout << "identify: log-likelihood " << r.tuning.log_likelihood << ", median relative error "
              << r.median_rel_error << ", " << r.etfe_inside << "/" << r.etfe_total
              << " ETFE points inside their ellipsoids\n";
  } else if (command == "verify") {
    if (!cfg.verify) throw hinfgp::ConfigError("config has no 'verify' section");
    const auto r = hinfgp::run_verify(*cfg.verify, ctx);
    std::cout << "verify: symmetry " << (r.symmetry_passed ? "pass" : "fail") << ", Driscoll "
              << hinfgp::to_string(r.hermitian.verdict) << "\n";
  } else {
    if (!cfg.sample) throw hinfgp::ConfigError("config has no 'sample' section");
    const auto r = hinfgp::run_sample(*cfg.sample, ctx);
    std::cout << "sample: " << r.count << " paths";
    if (r.count > 0) std::cout << ", mean abs-sum " << r.abs_sum.mean.real();
    std::cout << "\n";
  }
  std::cout << "outputs written to " << ctx.out_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian frequency-domain system identification with H-infinity Gaussian process priors"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  Common common;
  CLI::App* identify = app.add_subcommand("identify", "simulate, estimate the ETFE, tune and regress");
  CLI::App* verify = app.add_subcommand("verify", "symmetry and Driscoll checks for a kernel");
  CLI::App* sample = app.add_subcommand("sample", "draw impulse responses from a prior");
  for (CLI::App* cmd : {identify, verify, sample}) add_common(cmd, common);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, common);
  } catch (const std::exception& e) {
    std::cerr << "hinfgp " << command << ": error: " << e.what() << "\n";
    return 1;
  }
}
