// Command-line driver: run scenarios from a JSON config, validate configs,
// and summarize finished runs. Exit codes: 0 success, 1 partial failure or
// runtime error, 2 bad config / bad usage.
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qfidyn/experiment.hpp"

namespace qe = qfidyn::experiment;

namespace {

struct RunOptions {
  std::string config_path;
  std::string output_dir;
  int workers = -1;
  bool dry_run = false;
};

qe::Config load_with_overrides(const RunOptions& opt) {
  qe::Config cfg = qe::load_config_file(opt.config_path);
  if (!opt.output_dir.empty()) cfg.output_dir = opt.output_dir;
  if (opt.workers >= 0) cfg.workers = opt.workers;
  return cfg;
}

int finish(const qe::RunOutcome& outcome) {
  if (!outcome.failed_realizations.empty()) {
    std::cerr << outcome.failed_realizations.size() << " of " << outcome.n_realizations
              << " realizations failed; see manifest.json in " << outcome.output_dir
              << '\n';
  }
  std::cout << "wrote " << outcome.output_dir << '\n';
  return outcome.partial_failure() ? 1 : 0;
}

void add_run_options(CLI::App* cmd, RunOptions& opt) {
  cmd->add_option("-c,--config", opt.config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("-o,--output", opt.output_dir, "override output_dir from the config");
  cmd->add_option("-w,--workers", opt.workers,
                  "worker threads (0 = QFIDYN_WORKERS env or hardware)");
  cmd->add_flag("--dry-run", opt.dry_run, "write only the manifest, no computation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qfidyn: exact quantum Fisher information dynamics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qfidyn::kVersion));

  RunOptions run_opt;
  CLI::App* run_cmd = app.add_subcommand("run", "execute one scenario");
  add_run_options(run_cmd, run_opt);

  RunOptions sweep_opt;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "execute a parameter sweep");
  add_run_options(sweep_cmd, sweep_opt);

  std::string validate_path;
  CLI::App* validate_cmd = app.add_subcommand("validate", "check a config and echo it");
  validate_cmd->add_option("-c,--config", validate_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);

  std::string report_dir;
  CLI::App* report_cmd = app.add_subcommand("report", "summarize a finished run");
  report_cmd->add_option("dir", report_dir, "run directory containing manifest.json")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) {
      const qe::Config cfg = load_with_overrides(run_opt);
      for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
      const qe::RunOutcome outcome = cfg.sweep && cfg.scenario == "coupling-sweep"
                                          ? qe::run_sweep(cfg, run_opt.dry_run)
                                          : qe::run(cfg, run_opt.dry_run);
      return finish(outcome);
    }
    if (*sweep_cmd) {
      const qe::Config cfg = load_with_overrides(sweep_opt);
      for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
      return finish(qe::run_sweep(cfg, sweep_opt.dry_run));
    }
    if (*validate_cmd) {
      const qe::Config cfg = qe::load_config_file(validate_path);
      for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << qe::resolved_config_json(cfg) << '\n';
      return 0;
    }
    if (*report_cmd) {
      std::cout << qe::report(report_dir);
      return 0;
    }
  } catch (const qfidyn::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
