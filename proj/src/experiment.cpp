#include "qfidyn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include <json.hpp>

#include "qfidyn/correlators.hpp"
#include "qfidyn/evolution.hpp"
#include "qfidyn/measurement.hpp"
#include "qfidyn/rmt_analytics.hpp"
#include "qfidyn/rng.hpp"

namespace qfidyn::experiment {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------- config ---

const std::set<std::string>& scenario_ids() {
  static const std::set<std::string> ids = {
      "rmt-microcanonical", "rmt-qfi",        "spin-qfi",   "spin-regimes",
      "coupling-sweep",     "two-spin-ratio", "correlators"};
  return ids;
}

bool is_spin_scenario(const std::string& s) {
  return s == "spin-qfi" || s == "spin-regimes" || s == "coupling-sweep" ||
         s == "two-spin-ratio";
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw InputError("config: unknown key '" + path + it.key() + "'");
  }
}

template <typename T>
T get_field(const json& j, const std::string& path, const char* key, T def) {
  auto it = j.find(key);
  if (it == j.end()) return def;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw InputError("config: field '" + path + key + "' has the wrong type");
  }
}

std::string get_choice(const json& j, const std::string& path, const char* key,
                       const std::string& def, std::initializer_list<const char*> allowed) {
  const std::string v = get_field<std::string>(j, path, key, def);
  for (const char* a : allowed)
    if (v == a) return v;
  std::string msg = "config: field '" + path + key + "' must be one of {";
  bool first = true;
  for (const char* a : allowed) {
    if (!first) msg += ", ";
    msg += a;
    first = false;
  }
  throw InputError(msg + "}");
}

void require_finite(double v, const std::string& field) {
  if (!std::isfinite(v)) throw InputError("config: field '" + field + "' must be finite");
}

TimeGridSpec parse_time_grid(const json& j) {
  check_keys(j, "time_grid.", {"t_min", "t_max", "n_points", "spacing", "include_zero"});
  TimeGridSpec g;
  g.t_min = get_field<double>(j, "time_grid.", "t_min", g.t_min);
  g.t_max = get_field<double>(j, "time_grid.", "t_max", g.t_max);
  g.n_points = get_field<int>(j, "time_grid.", "n_points", g.n_points);
  g.geometric =
      get_choice(j, "time_grid.", "spacing", "geometric", {"geometric", "linear"}) ==
      "geometric";
  g.include_zero = get_field<bool>(j, "time_grid.", "include_zero", g.include_zero);
  if (!(g.t_min > 0.0) || !std::isfinite(g.t_min))
    throw InputError("config: time_grid.t_min must be > 0");
  if (!(g.t_max > g.t_min) || !std::isfinite(g.t_max))
    throw InputError("config: time_grid.t_max must exceed t_min");
  if (g.n_points < 2) throw InputError("config: time_grid.n_points must be at least 2");
  return g;
}

RmtBlock parse_rmt(const json& j) {
  check_keys(j, "rmt.",
             {"n_levels", "omega", "g", "initial_level_fraction", "ensemble_average",
              "profile_max_offset"});
  RmtBlock b;
  b.model.n_levels = get_field<int>(j, "rmt.", "n_levels", b.model.n_levels);
  b.model.omega = get_field<double>(j, "rmt.", "omega", b.model.omega);
  b.model.g = get_field<double>(j, "rmt.", "g", b.model.g);
  b.initial_level_fraction =
      get_field<double>(j, "rmt.", "initial_level_fraction", b.initial_level_fraction);
  b.ensemble_average = get_choice(j, "rmt.", "ensemble_average", "per-realization",
                                  {"per-realization", "mean-overlap"}) == "per-realization"
                           ? EnsembleAverage::PerRealization
                           : EnsembleAverage::MeanOverlap;
  b.profile_max_offset =
      get_field<int>(j, "rmt.", "profile_max_offset", b.profile_max_offset);
  if (b.model.n_levels < 8 || b.model.n_levels > 4096)
    throw InputError("config: rmt.n_levels must be in [8, 4096]");
  require_finite(b.model.omega, "rmt.omega");
  require_finite(b.model.g, "rmt.g");
  if (!(b.model.omega > 0.0)) throw InputError("config: rmt.omega must be > 0");
  if (!(b.model.g > 0.0)) throw InputError("config: rmt.g must be > 0");
  if (!(b.initial_level_fraction >= 0.0 && b.initial_level_fraction <= 1.0))
    throw InputError("config: rmt.initial_level_fraction must be in [0, 1]");
  if (b.profile_max_offset < 1)
    throw InputError("config: rmt.profile_max_offset must be at least 1");
  return b;
}

SpinBlock parse_spin(const json& j) {
  check_keys(j, "spin.",
             {"n_sites", "n_system", "field_b", "bath_bx", "bath_jx", "jz_sb", "jx_sb",
              "couple_sites", "initial_state", "spectral_fraction", "with_population_cfi",
              "cfi_delta", "fit_t_max"});
  SpinBlock b;
  b.chain.n_sites = get_field<int>(j, "spin.", "n_sites", b.chain.n_sites);
  b.chain.n_system = get_field<int>(j, "spin.", "n_system", b.chain.n_system);
  b.chain.field_b = get_field<double>(j, "spin.", "field_b", b.chain.field_b);
  b.chain.bath_bx = get_field<double>(j, "spin.", "bath_bx", b.chain.bath_bx);
  b.chain.bath_jx = get_field<double>(j, "spin.", "bath_jx", b.chain.bath_jx);
  b.chain.jz_sb = get_field<double>(j, "spin.", "jz_sb", b.chain.jz_sb);
  b.chain.jx_sb = get_field<double>(j, "spin.", "jx_sb", b.chain.jx_sb);
  if (j.contains("couple_sites"))
    b.chain.couple_sites = get_field<std::vector<int>>(j, "spin.", "couple_sites", {});
  else if (b.chain.n_system != 1)
    throw InputError("config: spin.couple_sites is required when n_system != 1");
  try {
    validate(b.chain);
  } catch (const InputError& e) {
    throw InputError(std::string("config: spin: ") + e.what());
  }
  const std::string state =
      get_choice(j, "spin.", "initial_state", "h0-eigenstate",
                 {"h0-eigenstate", "antiferromagnetic", "x-polarized"});
  b.initial_state = state == "h0-eigenstate"      ? InitialStateKind::H0Eigenstate
                    : state == "antiferromagnetic" ? InitialStateKind::Antiferromagnetic
                                                   : InitialStateKind::XPolarized;
  b.spectral_fraction =
      get_field<double>(j, "spin.", "spectral_fraction", b.spectral_fraction);
  b.with_population_cfi =
      get_field<bool>(j, "spin.", "with_population_cfi", b.with_population_cfi);
  b.cfi_delta = get_field<double>(j, "spin.", "cfi_delta", b.cfi_delta);
  b.fit_t_max = get_field<double>(j, "spin.", "fit_t_max", b.fit_t_max);
  if (!(b.spectral_fraction >= 0.0 && b.spectral_fraction <= 1.0))
    throw InputError("config: spin.spectral_fraction must be in [0, 1]");
  if (b.cfi_delta < 0.0 || !std::isfinite(b.cfi_delta))
    throw InputError("config: spin.cfi_delta must be >= 0");
  if (!(b.fit_t_max > 0.0) || !std::isfinite(b.fit_t_max))
    throw InputError("config: spin.fit_t_max must be > 0");
  return b;
}

SweepBlock parse_sweep(const json& j, const std::string& scenario) {
  check_keys(j, "sweep.", {"axis", "values", "probe_time"});
  SweepBlock s;
  s.axis = get_choice(j, "sweep.", "axis", "", {"spin.jx_sb", "rmt.n_levels"});
  s.values = get_field<std::vector<double>>(j, "sweep.", "values", {});
  s.probe_time = get_field<double>(j, "sweep.", "probe_time", s.probe_time);
  if (s.values.size() < 2)
    throw InputError("config: sweep.values needs at least 2 points");
  for (double v : s.values) require_finite(v, "sweep.values");
  if (!(s.probe_time > 0.0) || !std::isfinite(s.probe_time))
    throw InputError("config: sweep.probe_time must be > 0");
  const bool spin_axis = s.axis == "spin.jx_sb";
  if (spin_axis && !(scenario == "coupling-sweep" || scenario == "spin-qfi"))
    throw InputError("config: sweep.axis spin.jx_sb requires a spin scenario");
  if (!spin_axis && scenario != "rmt-qfi")
    throw InputError("config: sweep.axis rmt.n_levels requires scenario rmt-qfi");
  if (!spin_axis)
    for (double v : s.values)
      if (v != std::floor(v) || v < 8 || v > 4096)
        throw InputError("config: sweep.values for rmt.n_levels must be integers in [8, 4096]");
  return s;
}

}  // namespace

Config parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("config: top level must be a JSON object");
  // a manifest wraps its config; accept it directly for reruns
  if (j.contains("config") && j.contains("version")) j = j.at("config");

  check_keys(j, "",
             {"scenario", "seed", "n_realizations", "workers", "output_dir",
              "emit_plot_script", "probe_time", "time_grid", "rmt", "spin", "sweep"});

  Config c;
  if (!j.contains("scenario")) throw InputError("config: missing required key 'scenario'");
  c.scenario = get_field<std::string>(j, "", "scenario", "");
  if (!scenario_ids().count(c.scenario)) {
    std::string msg = "config: scenario '" + c.scenario + "' is not one of {";
    bool first = true;
    for (const auto& s : scenario_ids()) {
      if (!first) msg += ", ";
      msg += s;
      first = false;
    }
    throw InputError(msg + "}");
  }

  if (j.contains("seed")) {
    const json& js = j.at("seed");
    if (!js.is_number_unsigned())
      throw InputError("config: field 'seed' must be a nonnegative integer");
    c.seed = js.get<std::uint64_t>();
  }
  c.n_realizations = get_field<int>(j, "", "n_realizations", c.n_realizations);
  c.workers = get_field<int>(j, "", "workers", c.workers);
  c.output_dir = get_field<std::string>(j, "", "output_dir", c.output_dir);
  c.emit_plot_script = get_field<bool>(j, "", "emit_plot_script", c.emit_plot_script);
  if (j.contains("probe_time")) {
    const double pt = get_field<double>(j, "", "probe_time", 0.0);
    if (!(pt > 0.0) || !std::isfinite(pt))
      throw InputError("config: probe_time must be > 0");
    c.probe_time = pt;
  }
  if (c.n_realizations < 1) throw InputError("config: n_realizations must be at least 1");
  if (c.workers < 0) throw InputError("config: workers must be >= 0");
  if (c.output_dir.empty()) throw InputError("config: output_dir must not be empty");

  if (j.contains("time_grid")) c.time_grid = parse_time_grid(j.at("time_grid"));

  const bool needs_spin = is_spin_scenario(c.scenario);
  const bool needs_rmt = !needs_spin;
  if (needs_rmt && !j.contains("rmt"))
    throw InputError("config: scenario " + c.scenario + " requires the 'rmt' block");
  if (needs_spin && !j.contains("spin"))
    throw InputError("config: scenario " + c.scenario + " requires the 'spin' block");
  if (j.contains("rmt")) {
    c.rmt = parse_rmt(j.at("rmt"));
    if (!needs_rmt)
      c.warnings.push_back("'rmt' block is not used by scenario " + c.scenario);
  }
  if (j.contains("spin")) {
    c.spin = parse_spin(j.at("spin"));
    if (!needs_spin)
      c.warnings.push_back("'spin' block is not used by scenario " + c.scenario);
  }
  if (j.contains("sweep")) c.sweep = parse_sweep(j.at("sweep"), c.scenario);

  if (c.scenario == "coupling-sweep" && !c.sweep)
    throw InputError("config: scenario coupling-sweep requires the 'sweep' block");
  if (c.scenario == "correlators" && c.n_realizations < 2)
    throw InputError("config: scenario correlators needs n_realizations >= 2");
  if (c.scenario == "two-spin-ratio") {
    if (c.spin.chain.n_system != 2)
      throw InputError("config: scenario two-spin-ratio requires spin.n_system = 2");
    if (c.spin.initial_state == InitialStateKind::XPolarized)
      throw InputError(
          "config: scenario two-spin-ratio supports h0-eigenstate or antiferromagnetic "
          "initial states");
  }
  if (needs_spin && c.scenario != "coupling-sweep" && c.n_realizations > 1)
    c.warnings.push_back("spin scenarios are deterministic; realizations are identical");
  return c;
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("config: cannot open file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string resolved_config_json(const Config& c) {
  json j;
  j["scenario"] = c.scenario;
  j["seed"] = c.seed;
  j["n_realizations"] = c.n_realizations;
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;
  j["emit_plot_script"] = c.emit_plot_script;
  if (c.probe_time) j["probe_time"] = *c.probe_time;
  j["time_grid"] = {{"t_min", c.time_grid.t_min},
                    {"t_max", c.time_grid.t_max},
                    {"n_points", c.time_grid.n_points},
                    {"spacing", c.time_grid.geometric ? "geometric" : "linear"},
                    {"include_zero", c.time_grid.include_zero}};
  if (!is_spin_scenario(c.scenario)) {
    j["rmt"] = {{"n_levels", c.rmt.model.n_levels},
                {"omega", c.rmt.model.omega},
                {"g", c.rmt.model.g},
                {"initial_level_fraction", c.rmt.initial_level_fraction},
                {"ensemble_average",
                 c.rmt.ensemble_average == EnsembleAverage::PerRealization
                     ? "per-realization"
                     : "mean-overlap"},
                {"profile_max_offset", c.rmt.profile_max_offset}};
  } else {
    const char* state = c.spin.initial_state == InitialStateKind::H0Eigenstate
                            ? "h0-eigenstate"
                        : c.spin.initial_state == InitialStateKind::Antiferromagnetic
                            ? "antiferromagnetic"
                            : "x-polarized";
    j["spin"] = {{"n_sites", c.spin.chain.n_sites},
                 {"n_system", c.spin.chain.n_system},
                 {"field_b", c.spin.chain.field_b},
                 {"bath_bx", c.spin.chain.bath_bx},
                 {"bath_jx", c.spin.chain.bath_jx},
                 {"jz_sb", c.spin.chain.jz_sb},
                 {"jx_sb", c.spin.chain.jx_sb},
                 {"couple_sites", c.spin.chain.couple_sites},
                 {"initial_state", state},
                 {"spectral_fraction", c.spin.spectral_fraction},
                 {"with_population_cfi", c.spin.with_population_cfi},
                 {"cfi_delta", c.spin.cfi_delta},
                 {"fit_t_max", c.spin.fit_t_max}};
  }
  if (c.sweep)
    j["sweep"] = {{"axis", c.sweep->axis},
                  {"values", c.sweep->values},
                  {"probe_time", c.sweep->probe_time}};
  return j.dump(2);
}

Vector make_time_grid(const TimeGridSpec& g) {
  if (!(g.t_min > 0.0) || !(g.t_max > g.t_min) || g.n_points < 2)
    throw InputError("make_time_grid: need 0 < t_min < t_max and n_points >= 2");
  const int extra = g.include_zero ? 1 : 0;
  Vector t(g.n_points + extra);
  if (g.include_zero) t(0) = 0.0;
  if (g.geometric) {
    const double r = std::pow(g.t_max / g.t_min, 1.0 / (g.n_points - 1));
    double v = g.t_min;
    for (int i = 0; i < g.n_points; ++i, v *= r) t(extra + i) = v;
  } else {
    const double dt = (g.t_max - g.t_min) / (g.n_points - 1);
    for (int i = 0; i < g.n_points; ++i) t(extra + i) = g.t_min + i * dt;
  }
  t(t.size() - 1) = g.t_max;  // exact endpoint regardless of rounding
  return t;
}

int resolve_workers(const Config& c) {
  int w = c.workers;
  if (w == 0)
    if (const char* env = std::getenv("QFIDYN_WORKERS")) w = std::atoi(env);
  if (w <= 0) w = static_cast<int>(std::thread::hardware_concurrency());
  if (w <= 0) w = 1;
  return std::min(w, std::max(c.n_realizations, 1));
}

// ------------------------------------------------------------ table / io ---

namespace {

struct Table {
  std::string name;  // file stem suffix; first table of a scenario uses none
  std::vector<std::string> columns;
  Matrix values;
};

struct RealizationResult {
  std::vector<Table> tables;
  std::map<std::string, double> derived;
  bool failed = false;
  std::string error;
};

void write_csv(const fs::path& file, const Table& t) {
  std::ofstream out(file, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw InputError("cannot open output file " + file.string());
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    out << (i ? "," : "") << t.columns[i];
  out << '\n';
  char buf[32];
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.16e", t.values(r, c));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw NumericalError("failed writing " + file.string());
}

// mean and standard error per row across realizations; column 0 is the shared
// axis and is passed through
Table aggregate_table(const std::vector<const Table*>& reals) {
  const Table& first = *reals.front();
  Table agg;
  agg.name = first.name;
  agg.columns.push_back(first.columns[0]);
  for (std::size_t c = 1; c < first.columns.size(); ++c) {
    agg.columns.push_back(first.columns[c] + "_mean");
    agg.columns.push_back(first.columns[c] + "_stderr");
  }
  const Eigen::Index rows = first.values.rows();
  const int n = static_cast<int>(reals.size());
  agg.values.resize(rows, 1 + 2 * (first.columns.size() - 1));
  agg.values.col(0) = first.values.col(0);
  for (std::size_t c = 1; c < first.columns.size(); ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      double m = 0.0;
      for (const Table* t : reals) m += t->values(r, c);
      m /= n;
      double se = 0.0;
      if (n > 1) {
        double s2 = 0.0;
        for (const Table* t : reals) {
          const double d = t->values(r, c) - m;
          s2 += d * d;
        }
        se = std::sqrt(s2 / (n - 1) / n);
      }
      agg.values(r, 2 * c - 1) = m;
      agg.values(r, 2 * c) = se;
    }
  }
  return agg;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename Fn>
void parallel_for_realizations(int n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const int k = next.fetch_add(1);
        if (k >= n) break;
        fn(k);
      }
    });
  for (auto& th : pool) th.join();
}

int index_from_fraction(double fraction, int n) {
  const int idx = static_cast<int>(std::llround(fraction * (n - 1)));
  return std::clamp(idx, 0, n - 1);
}

// ------------------------------------------------------- rmt realizations ---

struct RmtInstance {
  EvolutionContext ctx;
  double e0 = 0.0;
  int alpha0 = 0;
  double gamma = 0.0;
};

RmtInstance make_rmt_instance(const RmtBlock& b, std::uint64_t seed, int k) {
  const DeutschSpec& m = b.model;
  Rng rng(seed, static_cast<std::uint64_t>(k));
  const Matrix h = build_deutsch_hamiltonian(m, rng);
  RmtInstance inst;
  inst.alpha0 = index_from_fraction(b.initial_level_fraction, m.n_levels);
  inst.e0 = h(inst.alpha0, inst.alpha0);
  inst.gamma = gamma_width(m.g, m.n_levels, m.omega);
  Vector psi0 = Vector::Zero(m.n_levels);
  psi0(inst.alpha0) = 1.0;
  inst.ctx = make_context_diag(eigh(h), psi0, h0_prime_deutsch(m.n_levels));
  return inst;
}

struct McMoments {
  double mean = 0.0, m2 = 0.0, var = 0.0;
};

McMoments rmt_mc_moments(const DeutschSpec& m, double e0, double gamma) {
  const Vector alpha = h0_prime_deutsch(m.n_levels);
  const Vector energies = m.omega * alpha;
  McMoments mom;
  mom.mean = microcanonical_average(alpha, energies, e0, gamma, m.omega);
  mom.m2 = microcanonical_average(alpha.cwiseProduct(alpha), energies, e0, gamma, m.omega);
  mom.var = std::max(mom.m2 - mom.mean * mom.mean, 0.0);
  return mom;
}

RealizationResult rmt_qfi_realization(const Config& cfg, int k) {
  const RmtInstance inst = make_rmt_instance(cfg.rmt, cfg.seed, k);
  const Vector times = make_time_grid(cfg.time_grid);
  const Vector q = qfi_exact(inst.ctx, times);
  const McMoments mom = rmt_mc_moments(cfg.rmt.model, inst.e0, inst.gamma);
  const RmtPredictionInputs in{inst.gamma, cfg.rmt.model.omega, mom.m2, mom.var};
  const Vector pred = qfi_rmt(in, times);

  Vector rel(times.size());
  std::vector<double> window;
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    rel(i) = q(i) != 0.0 ? std::abs(1.0 - pred(i) / q(i))
                         : (pred(i) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    const double gt = inst.gamma * times(i);
    if (gt >= 1.0 && gt <= 20.0) window.push_back(rel(i));
  }

  RealizationResult res;
  Table t;
  t.columns = {"t", "qfi_exact", "qfi_rmt", "rel_dev"};
  t.values.resize(times.size(), 4);
  t.values.col(0) = times;
  t.values.col(1) = q;
  t.values.col(2) = pred;
  t.values.col(3) = rel;
  res.tables.push_back(std::move(t));
  res.derived["gamma"] = inst.gamma;
  res.derived["e0"] = inst.e0;
  res.derived["alpha0"] = inst.alpha0;
  res.derived["d_eff"] = effective_dimension(inst.ctx.a0);
  res.derived["d_eff_rmt"] = deff_rmt_estimate(1.0 / cfg.rmt.model.omega, inst.gamma);
  res.derived["mc_mean"] = mom.mean;
  res.derived["mc_m2"] = mom.m2;
  res.derived["mc_var"] = mom.var;
  res.derived["median_rel_dev_window"] = median_of(window);
  if (cfg.probe_time) res.derived["f_q_probe"] = qfi_exact(inst.ctx, *cfg.probe_time);
  return res;
}

RealizationResult rmt_microcanonical_realization(const Config& cfg, int k) {
  const RmtInstance inst = make_rmt_instance(cfg.rmt, cfg.seed, k);
  const double de = diagonal_ensemble_average(inst.ctx.a0, inst.ctx.h0p.diagonal());
  const McMoments mom = rmt_mc_moments(cfg.rmt.model, inst.e0, inst.gamma);
  const double rel = std::abs(1.0 - mom.mean / de);

  RealizationResult res;
  Table t;
  t.columns = {"alpha0", "e0", "de_average", "mc_average", "rel_dev"};
  t.values.resize(1, 5);
  t.values << static_cast<double>(inst.alpha0), inst.e0, de, mom.mean, rel;
  res.tables.push_back(std::move(t));
  res.derived["gamma"] = inst.gamma;
  res.derived["d_eff"] = effective_dimension(inst.ctx.a0);
  res.derived["de_average"] = de;
  res.derived["mc_average"] = mom.mean;
  res.derived["rel_dev"] = rel;
  return res;
}

// the four-point index patterns published by the correlators scenario
const std::vector<FourPointPattern>& correlator_patterns() {
  // 0: <c(a)^4>            same state, all indices equal (three pairings)
  // 1: <c(a)^2 c(b)^2>     same state, two pairs
  // 2: <c(a)^2> <c(b)^2>-like cross pattern mu != nu, Gaussian term only
  // 3: <c_mu(a)c_nu(a)c_mu(b)c_nu(b)>  mu != nu, pure orthogonality correction
  static const std::vector<FourPointPattern> pats = {
      {true, 0, 0, 0, 0, 0},
      {true, 0, 0, 0, 1, 1},
      {false, 1, 0, 1, 0, 1},
      {false, 1, 0, 0, 1, 1},
  };
  return pats;
}

RealizationResult correlators_realization(const Config& cfg, int k) {
  const DeutschSpec& m = cfg.rmt.model;
  const double gamma = gamma_width(m.g, m.n_levels, m.omega);
  const int max_off = cfg.rmt.profile_max_offset;
  const Vector prof =
      overlap_profile_realization(m, cfg.seed, static_cast<std::uint64_t>(k), max_off);
  const auto& pats = correlator_patterns();
  const Vector four =
      four_point_realization(m, cfg.seed, static_cast<std::uint64_t>(k), pats);

  RealizationResult res;
  Table p;
  p.columns = {"offset", "csq", "lorentzian"};
  p.values.resize(prof.size(), 3);
  for (int i = 0; i < prof.size(); ++i) {
    const int off = i - max_off;
    p.values(i, 0) = off;
    p.values(i, 1) = prof(i);
    p.values(i, 2) = lorentzian_weight(off * m.omega, 0.0, gamma, m.omega);
  }
  res.tables.push_back(std::move(p));

  const int mu = m.n_levels / 2;  // bulk reference index for the analytic values
  Table f;
  f.name = "fourpoint";
  f.columns = {"pattern", "product", "analytic"};
  f.values.resize(static_cast<int>(pats.size()), 3);
  for (std::size_t ip = 0; ip < pats.size(); ++ip) {
    const auto& pat = pats[ip];
    const double analytic =
        pat.same_state
            ? four_point_same(mu, mu + pat.da, mu + pat.db, mu + pat.dap, mu + pat.dbp,
                              gamma, m.omega)
            : four_point_diff(mu, mu + pat.dnu, mu + pat.da, mu + pat.db, mu + pat.dap,
                              mu + pat.dbp, gamma, m.omega);
    f.values(static_cast<int>(ip), 0) = static_cast<double>(ip);
    f.values(static_cast<int>(ip), 1) = four(static_cast<int>(ip));
    f.values(static_cast<int>(ip), 2) = analytic;
  }
  res.tables.push_back(std::move(f));
  res.derived["gamma"] = gamma;
  return res;
}

// ------------------------------------------------------ spin realizations ---

// sigma^z diagonal of one site in the computational basis (site 1 = leftmost
// = most significant bit, bit 0 = up)
Vector site_z_diagonal(int n_sites, int site) {
  const int d = 1 << n_sites;
  Vector z(d);
  for (int n = 0; n < d; ++n) z(n) = 1.0 - 2.0 * ((n >> (n_sites - site)) & 1);
  return z;
}

// diagonal of V^T diag(d) V without forming the full matrix
Vector rotated_diagonal(const Vector& d, const Matrix& v) {
  Vector out(v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j) out(j) = v.col(j).cwiseAbs2().dot(d);
  return out;
}

Vector build_initial_state(const SpinBlock& sb) {
  const SpinChainSpec& spec = sb.chain;
  switch (sb.initial_state) {
    case InitialStateKind::Antiferromagnetic:
      return antiferromagnetic_state(spec.n_sites, spec.n_system);
    case InitialStateKind::H0Eigenstate: {
      const EigenSystem h0_sys = eigh(build_h0(spec));
      return h0_eigenstate(h0_sys, index_from_fraction(sb.spectral_fraction, spec.dim()));
    }
    case InitialStateKind::XPolarized: {
      const EigenSystem bath_sys = eigh(build_bath_hamiltonian(spec));
      return x_polarized_state(spec, bath_sys,
                               index_from_fraction(sb.spectral_fraction, spec.bath_dim()));
    }
  }
  throw InputError("build_initial_state: unknown initial state kind");
}

struct DecayFitOut {
  GammaFit fit;
  double o_free = 0.0;
  double o_bar = 0.0;
};

// Gamma from the relaxation of sigma^z_1; the reference state must have a
// definite sigma^z_1 or the fit has no contrast, so non-definite run states
// fall back to an H0 eigenstate in the same spectral region.
DecayFitOut fit_decay(const SpinBlock& sb, const EvolutionContext& ctx,
                      const Matrix& z1_eig, const Vector& z1_diag, const Vector& psi0_run) {
  const SpinChainSpec& spec = sb.chain;
  ComplexVector a_ref;
  Vector psi_ref;
  if (sb.initial_state == InitialStateKind::XPolarized) {
    const EigenSystem h0_sys = eigh(build_h0(spec));
    psi_ref = h0_eigenstate(h0_sys, index_from_fraction(sb.spectral_fraction, spec.dim()));
    a_ref = (ctx.sys.eigenvectors.transpose() * psi_ref).cast<complexd>();
  } else {
    psi_ref = psi0_run;
    a_ref = ctx.a0;
  }

  DecayFitOut out;
  const Vector z1_comp = site_z_diagonal(spec.n_sites, 1);
  out.o_free = psi_ref.cwiseAbs2().dot(z1_comp);  // [sigma^z_1, H0] = 0: constant
  out.o_bar = diagonal_ensemble_average(a_ref, z1_diag);

  const int n_fit = 481;
  Vector t_fit(n_fit);
  for (int i = 0; i < n_fit; ++i) t_fit(i) = sb.fit_t_max * i / (n_fit - 1);
  const Vector series = observable_evolution(ctx.sys.eigenvalues, a_ref, z1_eig, t_fit);
  out.fit = fit_gamma(t_fit, series, out.o_free, out.o_bar);
  return out;
}

struct SpinPipelineOut {
  RealizationResult res;
  Vector times;
  double gamma_hat = 0.0;
  double tau = 0.0;
  double var_de = 0.0;
  double m2_de = 0.0;
  double dos_e0 = 0.0;
};

SpinPipelineOut spin_pipeline(const Config& cfg) {
  const SpinBlock& sb = cfg.spin;
  const SpinChainSpec& spec = sb.chain;
  const Matrix h = build_hamiltonian(spec);
  const Vector psi0 = build_initial_state(sb);
  const double e0 = psi0.dot(h * psi0);
  EvolutionContext ctx = make_context_diag(eigh(h), psi0, h0_prime_diag(spec));
  const Matrix& v = ctx.sys.eigenvectors;

  const Vector z1 = site_z_diagonal(spec.n_sites, 1);
  const Matrix z1_eig = to_eigenbasis_diag(z1, v);
  const Vector z1_diag = z1_eig.diagonal();

  const DecayFitOut decay = fit_decay(sb, ctx, z1_eig, z1_diag, psi0);
  const double gamma_hat = decay.fit.gamma;

  const DensityOfStates dos = density_of_states(ctx.sys.eigenvalues);
  const double dos_e0 = dos(e0);
  if (!(dos_e0 > 0.0))
    throw NumericalError("spin pipeline: density of states vanishes at the probe energy");

  const Vector hp = h0_prime_diag(spec);
  const Vector hp_diag = ctx.h0p.diagonal();
  const Vector hp2_diag = rotated_diagonal(hp.cwiseProduct(hp), v);
  const double mean_de = diagonal_ensemble_average(ctx.a0, hp_diag);
  const double m2_de = diagonal_ensemble_average(ctx.a0, hp2_diag);
  const double var_de = std::max(m2_de - mean_de * mean_de, 0.0);
  const double tau = heisenberg_time(dos_e0, m2_de, var_de);

  const Vector times = make_time_grid(cfg.time_grid);
  const Vector q = qfi_exact(ctx, times);
  const RmtPredictionInputs in{gamma_hat, 1.0 / dos_e0, m2_de, var_de};
  const Vector pred = qfi_rmt(in, times);
  const Vector sz_run = observable_evolution(ctx, z1_eig, times);

  SpinPipelineOut out;
  Table t;
  t.columns = {"t", "qfi_exact", "qfi_rmt"};
  t.values.resize(times.size(), sb.with_population_cfi ? 5 : 4);
  t.values.col(0) = times;
  t.values.col(1) = q;
  t.values.col(2) = pred;

  auto& derived = out.res.derived;
  if (sb.with_population_cfi) {
    const double b = spec.field_b;
    const double delta =
        sb.cfi_delta > 0.0 ? sb.cfi_delta : std::max(1e-4 * std::abs(b), 1e-6);
    SpinChainSpec sp = spec, sm = spec;
    sp.field_b = b + delta;
    sm.field_b = b - delta;
    const PopulationProbe probe = make_population_probe(
        eigh(build_hamiltonian(sp)), eigh(build_hamiltonian(sm)), psi0, delta);
    t.columns.push_back("cfi_pop");
    t.values.col(3) = probe.cfi(times);

    // delta-halving consistency at a few spread-out sample times
    SpinChainSpec sph = spec, smh = spec;
    sph.field_b = b + 0.5 * delta;
    smh.field_b = b - 0.5 * delta;
    const PopulationProbe half = make_population_probe(
        eigh(build_hamiltonian(sph)), eigh(build_hamiltonian(smh)), psi0, 0.5 * delta);
    double drift_max = 0.0;
    for (int i = 1; i <= 4; ++i) {
      const double tt = times(std::min<Eigen::Index>(i * times.size() / 4, times.size() - 1));
      drift_max = std::max(drift_max, population_cfi_delta_drift(probe, half, tt));
    }
    derived["cfi_delta"] = delta;
    derived["cfi_drift_max"] = drift_max;
    derived["cfi_delta_warning"] = drift_max > 0.01 ? 1.0 : 0.0;
  }
  t.columns.push_back("sigma_z1");
  t.values.col(t.values.cols() - 1) = sz_run;
  out.res.tables.push_back(std::move(t));

  derived["gamma_hat"] = gamma_hat;
  derived["gamma_residual_rms"] = decay.fit.residual_rms;
  derived["gamma_window_t_max"] = decay.fit.window_t_max;
  derived["gamma_grid_fallback"] = decay.fit.grid_fallback ? 1.0 : 0.0;
  derived["o_free_ref"] = decay.o_free;
  derived["o_bar_ref"] = decay.o_bar;
  derived["e0"] = e0;
  derived["dos_e0"] = dos_e0;
  derived["dos_bin_width"] =
      dos.bin_centers.size() > 1 ? dos.bin_centers(1) - dos.bin_centers(0) : 0.0;
  derived["mean_h0p_de"] = mean_de;
  derived["m2_h0p_de"] = m2_de;
  derived["var_h0p_de"] = var_de;
  derived["tau"] = tau;
  derived["d_eff"] = effective_dimension(ctx.a0);
  derived["d_eff_rmt"] = deff_rmt_estimate(dos_e0, gamma_hat);
  if (cfg.probe_time) derived["f_q_probe"] = qfi_exact(ctx, *cfg.probe_time);

  out.times = times;
  out.gamma_hat = gamma_hat;
  out.tau = tau;
  out.var_de = var_de;
  out.m2_de = m2_de;
  out.dos_e0 = dos_e0;
  return out;
}

RealizationResult spin_qfi_realization(const Config& cfg) {
  return spin_pipeline(cfg).res;
}

RealizationResult spin_regimes_realization(const Config& cfg) {
  SpinPipelineOut out = spin_pipeline(cfg);
  const Table& series = out.res.tables.front();
  const Vector q = series.values.col(1);

  struct Window {
    double lo, hi, slope_expected, prefactor_expected;
  };
  const double g = out.gamma_hat, tau = out.tau;
  const std::vector<Window> windows = {
      {out.times(0), 0.1 / (2.0 * g), 2.0, 4.0 * out.var_de},
      {2.0 / g, 0.3 * tau, 1.0, 4.0 * out.var_de / g},
      {3.0 * tau, out.times(out.times.size() - 1), 2.0,
       4.0 * out.m2_de / (M_PI * out.dos_e0 * g)},
  };

  Table reg;
  reg.name = "regimes";
  reg.columns = {"regime",          "t_lo",  "t_hi",
                 "n_points",        "slope", "slope_expected",
                 "prefactor",       "prefactor_expected"};
  reg.values.resize(static_cast<int>(windows.size()), 8);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Window& w = windows[i];
    double slope = std::numeric_limits<double>::quiet_NaN();
    double pref = std::numeric_limits<double>::quiet_NaN();
    double n = 0;
    try {
      const PowerLawFit fit = fit_power_law(out.times, q, w.lo, w.hi, w.slope_expected);
      slope = fit.slope;
      pref = fit.prefactor_pinned;
      n = fit.n_points;
    } catch (const std::exception&) {
      out.res.derived["regime_" + std::to_string(i) + "_unfit"] = 1.0;
    }
    reg.values.row(static_cast<int>(i)) << static_cast<double>(i), w.lo, w.hi, n, slope,
        w.slope_expected, pref, w.prefactor_expected;
  }
  out.res.tables.push_back(std::move(reg));
  return out.res;
}

RealizationResult two_spin_realization(const Config& cfg) {
  const SpinBlock& sb = cfg.spin;
  const SpinChainSpec& spec2 = sb.chain;
  SpinChainSpec spec1 = spec2;  // drop system spin 2; bath sites shift down by one
  spec1.n_sites -= 1;
  spec1.n_system = 1;
  spec1.couple_sites = {spec2.couple_sites[0] - 1};
  validate(spec1);

  const Vector times = make_time_grid(cfg.time_grid);

  // two-probe chain
  const Matrix h2 = build_hamiltonian(spec2);
  const Vector psi2 = build_initial_state(sb);
  const double e0_2 = psi2.dot(h2 * psi2);
  EvolutionContext ctx2 = make_context_diag(eigh(h2), psi2, h0_prime_diag(spec2));
  const Vector f1 = qfi_exact(ctx2, times);

  const Vector zz = site_z_diagonal(spec2.n_sites, 1)
                        .cwiseProduct(site_z_diagonal(spec2.n_sites, 2));
  const Matrix zz_eig = to_eigenbasis_diag(zz, ctx2.sys.eigenvectors);
  const Vector zz_series = observable_evolution(ctx2, zz_eig, times);
  const double zz_de = diagonal_ensemble_average(ctx2.a0, zz_eig.diagonal());

  // single-probe reference with the same bath
  SpinBlock sb1 = sb;
  sb1.chain = spec1;
  const Matrix h1 = build_hamiltonian(spec1);
  const Vector psi1 = build_initial_state(sb1);
  const double e0_1 = psi1.dot(h1 * psi1);
  EvolutionContext ctx1 = make_context_diag(eigh(h1), psi1, h0_prime_diag(spec1));
  const Vector fsql = 2.0 * qfi_exact(ctx1, times);

  const Vector z1_1 = site_z_diagonal(spec1.n_sites, 1);
  const Matrix z1_eig_1 = to_eigenbasis_diag(z1_1, ctx1.sys.eigenvectors);
  const DecayFitOut decay = fit_decay(sb1, ctx1, z1_eig_1, z1_eig_1.diagonal(), psi1);
  const double gamma_hat = decay.fit.gamma;

  const DensityOfStates dos1 = density_of_states(ctx1.sys.eigenvalues);
  const double dos_e0_1 = dos1(e0_1);
  if (!(dos_e0_1 > 0.0))
    throw NumericalError("two-spin pipeline: single-chain density of states vanished");

  Vector ratio(times.size()), f1_pred(times.size()), fsql_pred(times.size());
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    ratio(i) = fsql(i) > 0.0 ? f1(i) / fsql(i) : std::numeric_limits<double>::quiet_NaN();
    fsql_pred(i) = two_spin_sql_prediction(dos_e0_1, gamma_hat, times(i));
    f1_pred(i) = two_spin_prediction(dos_e0_1, gamma_hat, zz_de, times(i));
  }

  RealizationResult res;
  Table t;
  t.columns = {"t", "f1_exact", "fsql_exact", "ratio", "z1z2", "f1_pred", "fsql_pred"};
  t.values.resize(times.size(), 7);
  t.values.col(0) = times;
  t.values.col(1) = f1;
  t.values.col(2) = fsql;
  t.values.col(3) = ratio;
  t.values.col(4) = zz_series;
  t.values.col(5) = f1_pred;
  t.values.col(6) = fsql_pred;
  res.tables.push_back(std::move(t));

  // late-time mean of the ratio over the last decade of the grid
  double late_sum = 0.0;
  int late_n = 0;
  const double t_lo = times(times.size() - 1) / 10.0;
  for (Eigen::Index i = 0; i < times.size(); ++i)
    if (times(i) >= t_lo && std::isfinite(ratio(i))) {
      late_sum += ratio(i);
      ++late_n;
    }

  res.derived["zz_de"] = zz_de;
  res.derived["ratio_pred"] = 1.0 + zz_de;
  res.derived["ratio_late_mean"] =
      late_n ? late_sum / late_n : std::numeric_limits<double>::quiet_NaN();
  res.derived["gamma_hat"] = gamma_hat;
  res.derived["dos_e0_single"] = dos_e0_1;
  res.derived["e0_two"] = e0_2;
  res.derived["e0_single"] = e0_1;
  res.derived["d_eff_two"] = effective_dimension(ctx2.a0);
  res.derived["d_eff_single"] = effective_dimension(ctx1.a0);
  res.derived["tau_single"] = heisenberg_time(dos_e0_1, 1.0, 1.0);
  return res;
}

// --------------------------------------------------------------- plumbing ---

std::string realization_file(int k, const std::string& table_name) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", k);
  std::string f = "realization_" + std::string(buf);
  if (!table_name.empty()) f += "_" + table_name;
  return f + ".csv";
}

std::string aggregate_file(const std::string& table_name) {
  return table_name.empty() ? "aggregate.csv" : "aggregate_" + table_name + ".csv";
}

const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Plot the aggregate CSV next to this script."""
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "aggregate.csv"), newline="") as fh:
    rows = list(csv.reader(fh))
header, data = rows[0], [[float(x) for x in r] for r in rows[1:]]
cols = {name: [r[i] for r in data] for i, name in enumerate(header)}

x = cols[header[0]]
fig, ax = plt.subplots(figsize=(7, 5))
positive = all(v > 0 for v in x)
for name in header[1:]:
    if name.endswith("_stderr"):
        continue
    ys = cols[name]
    positive = positive and all(v > 0 for v in ys)
    ax.plot(x, ys, label=name)
if positive:
    ax.set_xscale("log")
    ax.set_yscale("log")
ax.set_xlabel(header[0])
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "plot.png"), dpi=150)
print("wrote plot.png")
)PY";

json manifest_skeleton(const Config& cfg) {
  json man;
  man["version"] = kVersion;
  man["scenario"] = cfg.scenario;
  man["created_utc"] = utc_timestamp();
  man["config"] = json::parse(resolved_config_json(cfg));
  if (!cfg.warnings.empty()) man["warnings"] = cfg.warnings;
  return man;
}

void write_manifest(const fs::path& dir, const json& man) {
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw InputError("cannot open output file " + (dir / "manifest.json").string());
  out << man.dump(2) << '\n';
}

}  // namespace

RunOutcome run(const Config& cfg, bool dry_run) {
  if (cfg.scenario == "coupling-sweep")
    throw InputError("scenario coupling-sweep is a sweep; use run_sweep");
  const auto t_start = std::chrono::steady_clock::now();
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);

  json man = manifest_skeleton(cfg);
  std::vector<std::uint64_t> seeds(cfg.n_realizations);
  for (int k = 0; k < cfg.n_realizations; ++k)
    seeds[k] = Rng::stream_seed(cfg.seed, static_cast<std::uint64_t>(k));
  man["seeds"] = seeds;

  RunOutcome outcome;
  outcome.output_dir = cfg.output_dir;
  outcome.n_realizations = cfg.n_realizations;

  if (dry_run) {
    man["dry_run"] = true;
    man["files"] = json::array();
    write_manifest(dir, man);
    return outcome;
  }

  std::function<RealizationResult(int)> realization;
  if (cfg.scenario == "rmt-qfi")
    realization = [&](int k) { return rmt_qfi_realization(cfg, k); };
  else if (cfg.scenario == "rmt-microcanonical")
    realization = [&](int k) { return rmt_microcanonical_realization(cfg, k); };
  else if (cfg.scenario == "correlators")
    realization = [&](int k) { return correlators_realization(cfg, k); };
  else if (cfg.scenario == "spin-qfi")
    realization = [&](int) { return spin_qfi_realization(cfg); };
  else if (cfg.scenario == "spin-regimes")
    realization = [&](int) { return spin_regimes_realization(cfg); };
  else if (cfg.scenario == "two-spin-ratio")
    realization = [&](int) { return two_spin_realization(cfg); };
  else
    throw InputError("unknown scenario " + cfg.scenario);

  std::vector<RealizationResult> results(cfg.n_realizations);
  parallel_for_realizations(cfg.n_realizations, resolve_workers(cfg), [&](int k) {
    try {
      results[k] = realization(k);
    } catch (const std::exception& e) {
      results[k].failed = true;
      results[k].error = e.what();
    }
  });

  std::vector<std::string> files;
  json real_derived = json::array();
  std::map<std::string, std::pair<double, int>> ens_acc;
  for (int k = 0; k < cfg.n_realizations; ++k) {
    json rj;
    rj["index"] = k;
    rj["seed"] = seeds[k];
    if (results[k].failed) {
      outcome.failed_realizations.push_back(k);
      rj["failed"] = true;
      rj["error"] = results[k].error;
    } else {
      for (const Table& t : results[k].tables) {
        const std::string f = realization_file(k, t.name);
        write_csv(dir / f, t);
        files.push_back(f);
      }
      for (const auto& [key, val] : results[k].derived) {
        rj[key] = val;
        auto& [sum, n] = ens_acc[key];
        sum += val;
        n += 1;
      }
    }
    real_derived.push_back(std::move(rj));
  }

  json ensemble;
  for (const auto& [key, acc] : ens_acc) ensemble[key] = acc.first / acc.second;

  std::vector<const Table*> table_ptrs;
  std::size_t n_tables = 0;
  for (const auto& r : results)
    if (!r.failed) {
      n_tables = r.tables.size();
      break;
    }
  for (std::size_t ti = 0; ti < n_tables; ++ti) {
    table_ptrs.clear();
    for (const auto& r : results)
      if (!r.failed) table_ptrs.push_back(&r.tables[ti]);
    Table agg = aggregate_table(table_ptrs);

    // mean-overlap averaging: deviation of the ensemble-mean curves
    if (cfg.scenario == "rmt-qfi" &&
        cfg.rmt.ensemble_average == EnsembleAverage::MeanOverlap && ti == 0) {
      const double gamma = gamma_width(cfg.rmt.model.g, cfg.rmt.model.n_levels,
                                       cfg.rmt.model.omega);
      std::vector<double> window;
      for (Eigen::Index i = 0; i < agg.values.rows(); ++i) {
        const double t = agg.values(i, 0);
        const double qm = agg.values(i, 1), pm = agg.values(i, 3);
        if (qm != 0.0 && gamma * t >= 1.0 && gamma * t <= 20.0)
          window.push_back(std::abs(1.0 - pm / qm));
      }
      ensemble["median_rel_dev_window"] = median_of(window);
    }

    const std::string f = aggregate_file(agg.name);
    write_csv(dir / f, agg);
    files.push_back(f);
  }

  if (cfg.scenario == "correlators") {
    json pats = json::array();
    for (const auto& p : correlator_patterns())
      pats.push_back({{"same_state", p.same_state},
                      {"dnu", p.dnu},
                      {"da", p.da},
                      {"db", p.db},
                      {"dap", p.dap},
                      {"dbp", p.dbp}});
    man["fourpoint_patterns"] = std::move(pats);
  }

  if (cfg.emit_plot_script && n_tables > 0) {
    std::ofstream out(dir / "plot.py", std::ios::binary);
    out << kPlotScript;
    files.push_back("plot.py");
  }

  man["derived"] = {{"ensemble", std::move(ensemble)},
                    {"realizations", std::move(real_derived)}};
  man["failed_realizations"] = outcome.failed_realizations;
  man["files"] = files;
  man["wallclock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  write_manifest(dir, man);
  return outcome;
}

RunOutcome run_sweep(const Config& cfg, bool dry_run) {
  if (!cfg.sweep) throw InputError("config: sweep requires the 'sweep' block");
  const auto t_start = std::chrono::steady_clock::now();
  const SweepBlock& sw = *cfg.sweep;
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);

  const bool spin_axis = sw.axis == "spin.jx_sb";
  RunOutcome outcome;
  outcome.output_dir = cfg.output_dir;

  Table summary;
  summary.columns = spin_axis
                        ? std::vector<std::string>{"jx_sb", "f_q_probe", "gamma_hat"}
                        : std::vector<std::string>{"n_levels", "f_q_probe",
                                                   "median_rel_dev_window"};
  summary.values.resize(static_cast<int>(sw.values.size()), 3);

  json points = json::array();
  for (std::size_t i = 0; i < sw.values.size(); ++i) {
    const double v = sw.values[i];
    Config point = cfg;
    point.sweep.reset();
    point.warnings.clear();
    point.probe_time = sw.probe_time;
    point.scenario = spin_axis ? "spin-qfi" : "rmt-qfi";
    if (spin_axis)
      point.spin.chain.jx_sb = v;
    else
      point.rmt.model.n_levels = static_cast<int>(std::llround(v));
    char sub[16];
    std::snprintf(sub, sizeof sub, "point_%02d", static_cast<int>(i));
    point.output_dir = (dir / sub).string();

    const RunOutcome po = run(point, dry_run);
    for (int k : po.failed_realizations)
      outcome.failed_realizations.push_back(static_cast<int>(i) * cfg.n_realizations + k);
    outcome.n_realizations += po.n_realizations;

    double probe = std::numeric_limits<double>::quiet_NaN();
    double metric = std::numeric_limits<double>::quiet_NaN();
    if (!dry_run) {
      std::ifstream in(fs::path(point.output_dir) / "manifest.json", std::ios::binary);
      const json pm = json::parse(in);
      const json& ens = pm.at("derived").at("ensemble");
      if (ens.contains("f_q_probe")) probe = ens.at("f_q_probe").get<double>();
      const char* key = spin_axis ? "gamma_hat" : "median_rel_dev_window";
      if (ens.contains(key) && ens.at(key).is_number())
        metric = ens.at(key).get<double>();
    }
    summary.values.row(static_cast<int>(i)) << v, probe, metric;
    points.push_back({{"value", v}, {"dir", std::string(sub)}});
  }

  json man = manifest_skeleton(cfg);
  man["sweep_points"] = std::move(points);
  std::vector<std::string> files;
  if (!dry_run) {
    write_csv(dir / "summary.csv", summary);
    files.push_back("summary.csv");

    // ordering report: decay rate should grow with the coupling and the QFI
    // (or the prediction error) should shrink
    bool metric_up = true, probe_down = true, metric_down = true;
    for (int i = 1; i < summary.values.rows(); ++i) {
      metric_up = metric_up && summary.values(i, 2) > summary.values(i - 1, 2);
      metric_down = metric_down && summary.values(i, 2) < summary.values(i - 1, 2);
      probe_down = probe_down && summary.values(i, 1) < summary.values(i - 1, 1);
    }
    json mono;
    if (spin_axis) {
      mono["gamma_hat_increasing"] = metric_up;
      mono["f_q_probe_decreasing"] = probe_down;
    } else {
      mono["median_rel_dev_decreasing"] = metric_down;
    }
    man["monotonicity"] = std::move(mono);
  } else {
    man["dry_run"] = true;
  }
  man["failed_realizations"] = outcome.failed_realizations;
  man["files"] = files;
  man["wallclock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  write_manifest(dir, man);
  return outcome;
}

std::string report(const std::string& run_dir) {
  const fs::path mf = fs::path(run_dir) / "manifest.json";
  std::ifstream in(mf, std::ios::binary);
  if (!in) throw InputError("report: cannot open " + mf.string());
  json man;
  try {
    man = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("report: " + mf.string() + " is not valid JSON: " + e.what());
  }

  std::ostringstream out;
  out << "scenario:  " << man.value("scenario", std::string("?")) << '\n';
  out << "version:   " << man.value("version", std::string("?")) << '\n';
  out << "created:   " << man.value("created_utc", std::string("?")) << '\n';
  if (man.contains("wallclock_seconds"))
    out << "wallclock: " << man["wallclock_seconds"].get<double>() << " s\n";
  if (man.contains("dry_run") && man["dry_run"].get<bool>()) out << "dry run (no data)\n";
  if (man.contains("config") && man["config"].contains("n_realizations"))
    out << "realizations: " << man["config"]["n_realizations"].get<int>() << '\n';
  if (man.contains("failed_realizations")) {
    const auto& f = man["failed_realizations"];
    out << "failed:    " << f.size();
    if (!f.empty()) {
      out << " (indices";
      for (const auto& k : f) out << ' ' << k.get<int>();
      out << ')';
    }
    out << '\n';
  }
  if (man.contains("derived") && man["derived"].contains("ensemble")) {
    out << "ensemble derived quantities:\n";
    for (const auto& [key, val] : man["derived"]["ensemble"].items())
      out << "  " << key << " = " << val.dump() << '\n';
  }
  if (man.contains("monotonicity")) {
    out << "monotonicity:\n";
    for (const auto& [key, val] : man["monotonicity"].items())
      out << "  " << key << " = " << val.dump() << '\n';
  }
  if (man.contains("files")) {
    out << "files:\n";
    for (const auto& f : man["files"]) out << "  " << f.get<std::string>() << '\n';
  }
  if (man.contains("warnings"))
    for (const auto& w : man["warnings"]) out << "warning: " << w.get<std::string>() << '\n';
  return out.str();
}

}  // namespace qfidyn::experiment
