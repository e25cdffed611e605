#pragma once

#include <array>

namespace ionaddr::rabi {

/// Gaussian-envelope resonant Rabi drive. omega0 in rad/s, lengths in um.
struct BeamProfileParams {
  double omega0 = 0.0;
  double x_c = 0.0;
  double w0 = 1.0;

  void validate() const;
};

/// Readout mixing: eps_prep is the probability a |0> ion reads bright,
/// eps_meas the probability a |1> ion reads dark.
struct SpamModel {
  double eps_prep = 0.01;
  double eps_meas = 0.01;

  static SpamModel none() { return {0.0, 0.0}; }
  void validate() const;
};

/// Local Rabi frequency omega0 * exp(-2 (x - x_c)^2 / w0^2).
double local_rabi_frequency(const BeamProfileParams& params, double x_um);

/// sin^2((omega0 t / 2) exp(-2 (x - x_c)^2 / w0^2)); t in seconds.
double p_excited(const BeamProfileParams& params, double x_um, double t_s);

/// Partial derivatives of p_excited with respect to (omega0, x_c, w0).
std::array<double, 3> p_excited_gradient(const BeamProfileParams& params, double x_um, double t_s);

/// eps_prep + (1 - eps_prep - eps_meas) p.
double apply_spam(double p_ideal, const SpamModel& spam);
/// Slope of apply_spam with respect to p_ideal.
inline double spam_gain(const SpamModel& spam) { return 1.0 - spam.eps_prep - spam.eps_meas; }

/// Largest omega with sin^2(omega t / 2) <= floor for all t <= window:
/// (2 / T) asin(sqrt(floor)).
double crosstalk_rabi_bound(double observation_window_s, double detection_floor);

/// Intensity ratio for a two-photon co-propagating drive (omega proportional to I).
double intensity_crosstalk_ratio(double omega_bound, double omega_peak);

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline double hz_to_angular(double hz) { return kTwoPi * hz; }
inline double angular_to_hz(double omega) { return omega / kTwoPi; }

}  // namespace ionaddr::rabi
