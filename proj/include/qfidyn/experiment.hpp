#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qfidyn/common.hpp"
#include "qfidyn/rmt.hpp"
#include "qfidyn/spin_chain.hpp"

namespace qfidyn::experiment {

// Scenario runner: parses a JSON config (fail-closed, unknown keys rejected
// with their path), executes one of the built-in scenarios over an ensemble
// of realizations, and writes CSVs plus a manifest.json that is sufficient to
// reproduce the run bit-identically.

struct TimeGridSpec {
  double t_min = 1e-2;
  double t_max = 1e3;
  int n_points = 160;
  bool geometric = true;
  bool include_zero = false;  // prepend t = 0
};

Vector make_time_grid(const TimeGridSpec& g);

enum class InitialStateKind { H0Eigenstate, Antiferromagnetic, XPolarized };
enum class EnsembleAverage { PerRealization, MeanOverlap };

struct RmtBlock {
  DeutschSpec model;
  double initial_level_fraction = 0.5;  // alpha0 = round(fraction (N-1))
  // per-realization: deviation columns are averaged across realizations;
  // mean-overlap: deviations are computed from the ensemble-mean curve
  EnsembleAverage ensemble_average = EnsembleAverage::PerRealization;
  int profile_max_offset = 30;  // correlators scenario: overlap profile half-width
};

struct SpinBlock {
  SpinChainSpec chain;
  InitialStateKind initial_state = InitialStateKind::H0Eigenstate;
  // index of the H0 (or bath) eigenstate used as / inside the initial state,
  // as a fraction of the spectrum
  double spectral_fraction = 0.5;
  bool with_population_cfi = false;
  double cfi_delta = 0.0;   // 0: max(1e-4 |B|, 1e-6)
  double fit_t_max = 60.0;  // decay-fit series extends this far
};

struct SweepBlock {
  std::string axis;  // "spin.jx_sb" or "rmt.n_levels"
  std::vector<double> values;
  double probe_time = 1e4;  // QFI sampled here for the sweep summary
};

struct Config {
  std::string scenario;  // rmt-microcanonical | rmt-qfi | spin-qfi | spin-regimes
                         // | coupling-sweep | two-spin-ratio | correlators
  std::uint64_t seed = 20240817;
  int n_realizations = 1;
  int workers = 0;  // 0: QFIDYN_WORKERS env var, else hardware concurrency
  std::string output_dir = "runs/out";
  bool emit_plot_script = false;
  TimeGridSpec time_grid;
  RmtBlock rmt;
  SpinBlock spin;
  std::optional<SweepBlock> sweep;
  // extra single-time QFI sample recorded in the manifest (sweeps set this on
  // the runs they spawn)
  std::optional<double> probe_time;
  std::vector<std::string> warnings;  // e.g. present-but-unused blocks
};

// throws InputError naming the offending key/field
Config parse_config(const std::string& json_text);
// accepts a bare config or a previously written manifest.json
Config load_config_file(const std::string& path);
// canonical resolved form (all defaults made explicit), round-trips through
// parse_config
std::string resolved_config_json(const Config& c);

int resolve_workers(const Config& c);

struct RunOutcome {
  std::string output_dir;
  int n_realizations = 0;
  std::vector<int> failed_realizations;

  // more than 20% of realizations failed (maps to exit code 1)
  bool partial_failure() const {
    return n_realizations > 0 &&
           5 * static_cast<int>(failed_realizations.size()) > n_realizations;
  }
};

// dry run writes the manifest (config + seeds) only
RunOutcome run(const Config& c, bool dry_run = false);
// one run per sweep value in subdirectories, plus summary.csv on top
RunOutcome run_sweep(const Config& c, bool dry_run = false);

// human-readable digest of a finished run directory
std::string report(const std::string& run_dir);

}  // namespace qfidyn::experiment
