#pragma once

#include "qfidyn/common.hpp"

namespace qfidyn {

// Inputs of the closed-form QFI prediction: the golden-rule width, the mean
// level spacing at the probe energy (omega for the random-matrix model,
// 1/D(E0) for a chain), and the microcanonical second moment / variance of
// dH/dlambda.
struct RmtPredictionInputs {
  double gamma = 0.0;
  double level_spacing = 0.0;
  double m2 = 0.0;   // second moment of dH/dlambda at the probe energy
  double var = 0.0;  // variance of dH/dlambda at the probe energy
};

// 4 t^2 [ level_spacing m2 / (pi Gamma) + var u(Gamma t) ] with
// u(x) = (exp(-2x) - 1 + 2x) / (2 x^2): quadratic, then linear growth from
// the variance term, then quadratic again from the spectral-fluctuation term
double qfi_rmt(const RmtPredictionInputs& in, double t);
Vector qfi_rmt(const RmtPredictionInputs& in, const Vector& times);

// Lorentzian-weighted microcanonical smoothing of `values` at e_center.
// Weighted sum renormalized by the discrete weight total, so grid truncation
// does not bias constants; the profile is only resolved for gamma over grid
// spacing >~ 3 (callers surface that as a warning).
double microcanonical_average(const Vector& values, const Vector& energies,
                              double e_center, double gamma, double omega);

struct GammaFit {
  double gamma = 0.0;
  double residual_rms = 0.0;
  bool grid_fallback = false;  // refinement did not improve on the coarse scan
  double window_t_max = 0.0;   // fit window actually used
};

// Least-squares fit of the relaxation law
//   <O(t)> = <O(t)>_free exp(-2 Gamma t) + o_bar (1 - exp(-2 Gamma t))
// over a window [0, ~5/Gamma]: coarse log-spaced scan of Gamma in [1e-3, 10],
// golden-section refinement, window auto-extended while residuals stay large.
// Throws NumericalError when the series carries no decay contrast.
GammaFit fit_gamma(const Vector& times, const Vector& series, const Vector& o_free,
                   double o_bar);
GammaFit fit_gamma(const Vector& times, const Vector& series, double o_free, double o_bar);

// residual RMS of the decay law at fixed gamma (exposed for property tests)
double gamma_fit_residual(const Vector& times, const Vector& series, const Vector& o_free,
                          double o_bar, double gamma);

// Least-squares fit of log v = slope log t + log c over samples with
// t in [t_lo, t_hi] and v > 0; prefactor_pinned refits c with the slope
// held at pinned_slope. Needs at least 3 usable points.
struct PowerLawFit {
  double slope = 0.0;
  double prefactor = 0.0;         // c from the free fit
  double prefactor_pinned = 0.0;  // c with the slope fixed
  double pinned_slope = 0.0;
  int n_points = 0;
};

PowerLawFit fit_power_law(const Vector& times, const Vector& values, double t_lo,
                          double t_hi, double pinned_slope);

// crossover where the linear regime meets the late quadratic one:
// pi D(E0) var / m2
double heisenberg_time(double dos_e0, double m2, double var);

// effective dimension of a chaotic eigenstate envelope: (2 pi / 3) D(E0) Gamma
double deff_rmt_estimate(double dos_e0, double gamma);

// Closed-form QFI for two system probes whose microcanonical zz correlation is
// zz_mc: (1 + zz_mc) times the uncorrelated (shot-noise-limit) prediction,
// which is itself twice the single-probe curve. zz_mc > 0 beats that limit.
double two_spin_prediction(double dos_e0, double gamma, double zz_mc, double t);
double two_spin_sql_prediction(double dos_e0, double gamma, double t);

}  // namespace qfidyn
