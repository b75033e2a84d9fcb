#include "qfidyn/rmt_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "qfidyn/rmt.hpp"

namespace qfidyn {

namespace {

// u(x) = (exp(-2x) - 1 + 2x) / (2 x^2), u(0) = 1, monotone to 1/x for large x
double relax_factor(double x) {
  if (x < 1e-3) return 1.0 - 2.0 * x / 3.0 + x * x / 3.0 - 2.0 * x * x * x / 15.0;
  return (std::expm1(-2.0 * x) + 2.0 * x) / (2.0 * x * x);
}

void check_inputs(const RmtPredictionInputs& in) {
  if (!(in.gamma > 0.0) || !(in.level_spacing > 0.0))
    throw InputError("qfi_rmt: gamma and level_spacing must be > 0");
  if (in.m2 < 0.0 || in.var < 0.0) throw InputError("qfi_rmt: negative moments");
}

}  // namespace

double qfi_rmt(const RmtPredictionInputs& in, double t) {
  check_inputs(in);
  if (!(t >= 0.0)) throw InputError("qfi_rmt: t must be >= 0");
  if (t == 0.0) return 0.0;
  const double quad = in.level_spacing * in.m2 / (M_PI * in.gamma);
  return 4.0 * t * t * (quad + in.var * relax_factor(in.gamma * t));
}

Vector qfi_rmt(const RmtPredictionInputs& in, const Vector& times) {
  Vector out(times.size());
  for (Eigen::Index i = 0; i < times.size(); ++i) out(i) = qfi_rmt(in, times(i));
  return out;
}

double microcanonical_average(const Vector& values, const Vector& energies,
                              double e_center, double gamma, double omega) {
  if (values.size() != energies.size() || values.size() == 0)
    throw InputError("microcanonical_average: size mismatch");
  // renormalize by the discrete weight sum: the envelope is normalized on an
  // infinite grid, and the truncated tails would otherwise bias every average
  double acc = 0.0, wsum = 0.0;
  for (Eigen::Index a = 0; a < values.size(); ++a) {
    const double w = lorentzian_weight(e_center, energies(a), gamma, omega);
    acc += w * values(a);
    wsum += w;
  }
  if (!(wsum > 0.0))
    throw NumericalError("microcanonical_average: weights vanished on the grid");
  return acc / wsum;
}

double gamma_fit_residual(const Vector& times, const Vector& series, const Vector& o_free,
                          double o_bar, double gamma) {
  if (times.size() != series.size() || times.size() != o_free.size() || times.size() == 0)
    throw InputError("gamma_fit_residual: size mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    const double decay = std::exp(-2.0 * gamma * times(i));
    const double model = o_free(i) * decay + o_bar * (1.0 - decay);
    acc += (series(i) - model) * (series(i) - model);
  }
  return std::sqrt(acc / static_cast<double>(times.size()));
}

namespace {

constexpr double kGammaLo = 1e-3;
constexpr double kGammaHi = 10.0;

double windowed_residual(const Vector& t, const Vector& y, const Vector& of, double ob,
                         double gamma, Eigen::Index n_used) {
  return gamma_fit_residual(t.head(n_used), y.head(n_used), of.head(n_used), ob, gamma);
}

}  // namespace

GammaFit fit_gamma(const Vector& times, const Vector& series, const Vector& o_free,
                   double o_bar) {
  const auto n = times.size();
  if (n < 8) throw InputError("fit_gamma: need at least 8 samples");
  if (series.size() != n || o_free.size() != n) throw InputError("fit_gamma: size mismatch");
  if (!times.allFinite() || !series.allFinite() || !o_free.allFinite() || !std::isfinite(o_bar))
    throw InputError("fit_gamma: non-finite input");
  for (Eigen::Index i = 1; i < n; ++i)
    if (times(i) <= times(i - 1)) throw InputError("fit_gamma: times must be increasing");

  // no contrast between the free curve and the relaxed value => gamma is unidentifiable
  const double contrast = (o_free.array() - o_bar).abs().maxCoeff();
  const double scale = std::max(series.cwiseAbs().maxCoeff(), std::abs(o_bar));
  if (contrast < 1e-12 + 1e-9 * scale)
    throw NumericalError("fit_gamma: degenerate fit, observable has no decay contrast");

  const auto scan = [&](Eigen::Index n_used) {
    double best_g = kGammaLo, best_r = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 60; ++k) {
      const double g = kGammaLo * std::pow(kGammaHi / kGammaLo, k / 60.0);
      const double r = windowed_residual(times, series, o_free, o_bar, g, n_used);
      if (r < best_r) {
        best_r = r;
        best_g = g;
      }
    }
    return std::pair{best_g, best_r};
  };

  double g_grid, r_grid;
  std::tie(g_grid, r_grid) = scan(n);

  // fit window [0, 5/Gamma], at least 8 points, grown while residuals are large
  const auto window_points = [&](double g) {
    Eigen::Index m = 0;
    while (m < n && times(m) <= 5.0 / g) ++m;
    return std::max<Eigen::Index>(m, 8);
  };
  Eigen::Index n_used = std::min(window_points(g_grid), n);
  std::tie(g_grid, r_grid) = scan(n_used);

  const double data_range = series.head(n_used).maxCoeff() - series.head(n_used).minCoeff();
  while (n_used < n && r_grid > 0.05 * std::max(data_range, 1e-30)) {
    n_used = std::min(n_used * 2, n);
    std::tie(g_grid, r_grid) = scan(n_used);
  }

  // golden-section refinement in log(gamma) around the scan minimum
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::log(std::max(g_grid / 4.0, kGammaLo));
  double hi = std::log(std::min(g_grid * 4.0, kGammaHi));
  const auto res_log = [&](double lg) {
    return windowed_residual(times, series, o_free, o_bar, std::exp(lg), n_used);
  };
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = res_log(x1), f2 = res_log(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
    if (f1 < f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - phi * (hi - lo); f1 = res_log(x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + phi * (hi - lo); f2 = res_log(x2);
    }
  }
  const double g_ref = std::exp(0.5 * (lo + hi));
  const double r_ref = windowed_residual(times, series, o_free, o_bar, g_ref, n_used);

  GammaFit fit;
  fit.window_t_max = times(n_used - 1);
  if (r_ref <= r_grid) {
    fit.gamma = g_ref;
    fit.residual_rms = r_ref;
  } else {
    fit.gamma = g_grid;
    fit.residual_rms = r_grid;
    fit.grid_fallback = true;
  }
  return fit;
}

GammaFit fit_gamma(const Vector& times, const Vector& series, double o_free, double o_bar) {
  return fit_gamma(times, series, Vector::Constant(times.size(), o_free), o_bar);
}

PowerLawFit fit_power_law(const Vector& times, const Vector& values, double t_lo,
                          double t_hi, double pinned_slope) {
  if (times.size() != values.size()) throw InputError("fit_power_law: size mismatch");
  if (!(t_lo < t_hi)) throw InputError("fit_power_law: empty window");

  std::vector<double> lt, lv;
  for (int i = 0; i < times.size(); ++i) {
    if (times(i) < t_lo || times(i) > t_hi) continue;
    if (!(times(i) > 0.0) || !(values(i) > 0.0)) continue;
    if (!std::isfinite(values(i))) continue;
    lt.push_back(std::log(times(i)));
    lv.push_back(std::log(values(i)));
  }
  const int n = static_cast<int>(lt.size());
  if (n < 3) throw InputError("fit_power_law: fewer than 3 usable points in window");

  double st = 0.0, sv = 0.0, stt = 0.0, stv = 0.0;
  for (int i = 0; i < n; ++i) {
    st += lt[i];
    sv += lv[i];
    stt += lt[i] * lt[i];
    stv += lt[i] * lv[i];
  }
  const double det = n * stt - st * st;
  if (std::abs(det) < 1e-12 * n * stt)
    throw NumericalError("fit_power_law: degenerate time window");

  PowerLawFit fit;
  fit.n_points = n;
  fit.slope = (n * stv - st * sv) / det;
  fit.prefactor = std::exp((sv - fit.slope * st) / n);
  fit.pinned_slope = pinned_slope;
  fit.prefactor_pinned = std::exp((sv - pinned_slope * st) / n);
  return fit;
}

double heisenberg_time(double dos_e0, double m2, double var) {
  if (!(dos_e0 > 0.0) || !(m2 > 0.0) || var < 0.0)
    throw InputError("heisenberg_time: bad inputs");
  return M_PI * dos_e0 * var / m2;
}

double deff_rmt_estimate(double dos_e0, double gamma) {
  if (!(dos_e0 > 0.0) || !(gamma > 0.0)) throw InputError("deff_rmt_estimate: bad inputs");
  return 2.0 * M_PI / 3.0 * dos_e0 * gamma;
}

double two_spin_sql_prediction(double dos_e0, double gamma, double t) {
  RmtPredictionInputs single{gamma, 1.0 / dos_e0, 1.0, 1.0};
  return 2.0 * qfi_rmt(single, t);
}

double two_spin_prediction(double dos_e0, double gamma, double zz_mc, double t) {
  if (std::abs(zz_mc) > 1.0 + 1e-12) throw InputError("two_spin_prediction: |zz_mc| > 1");
  return (1.0 + zz_mc) * two_spin_sql_prediction(dos_e0, gamma, t);
}

}  // namespace qfidyn
