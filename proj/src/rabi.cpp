#include "ionaddr/rabi.hpp"

#include <algorithm>
#include <cmath>

#include "ionaddr/errors.hpp"

namespace ionaddr::rabi {

void BeamProfileParams::validate() const {
  if (!(omega0 >= 0.0) || !std::isfinite(omega0)) throw DomainError("omega0 must be >= 0");
  if (!(w0 > 0.0) || !std::isfinite(w0)) throw DomainError("w0 must be positive");
  if (!std::isfinite(x_c)) throw DomainError("x_c must be finite");
}

void SpamModel::validate() const {
  for (double e : {eps_prep, eps_meas}) {
    if (!(e >= 0.0 && e < 0.5)) throw DomainError("SPAM errors must lie in [0, 0.5)");
  }
}

double local_rabi_frequency(const BeamProfileParams& params, double x_um) {
  const double u = (x_um - params.x_c) / params.w0;
  return params.omega0 * std::exp(-2.0 * u * u);
}

double p_excited(const BeamProfileParams& params, double x_um, double t_s) {
  const double s = std::sin(0.5 * local_rabi_frequency(params, x_um) * t_s);
  return s * s;
}

std::array<double, 3> p_excited_gradient(const BeamProfileParams& params, double x_um, double t_s) {
  const double u = x_um - params.x_c;
  const double w = params.w0;
  const double envelope = std::exp(-2.0 * u * u / (w * w));
  const double theta = 0.5 * params.omega0 * t_s * envelope;
  const double dp_dtheta = std::sin(2.0 * theta);
  return {dp_dtheta * 0.5 * t_s * envelope,
          dp_dtheta * theta * 4.0 * u / (w * w),
          dp_dtheta * theta * 4.0 * u * u / (w * w * w)};
}

double apply_spam(double p_ideal, const SpamModel& spam) {
  return std::clamp(spam.eps_prep + spam_gain(spam) * p_ideal, 0.0, 1.0);
}

double crosstalk_rabi_bound(double observation_window_s, double detection_floor) {
  if (!(observation_window_s > 0.0)) throw DomainError("crosstalk_rabi_bound: window must be positive");
  if (!(detection_floor > 0.0 && detection_floor < 1.0)) {
    throw DomainError("crosstalk_rabi_bound: floor must lie in (0, 1)");
  }
  // asin(sqrt(floor)) <= pi/2, so omega T / 2 stays inside the first half-period.
  return 2.0 / observation_window_s * std::asin(std::sqrt(detection_floor));
}

double intensity_crosstalk_ratio(double omega_bound, double omega_peak) {
  if (!(omega_peak > 0.0)) throw DomainError("intensity_crosstalk_ratio: peak must be positive");
  if (omega_bound < 0.0) throw DomainError("intensity_crosstalk_ratio: bound must be >= 0");
  return omega_bound / omega_peak;
}

}  // namespace ionaddr::rabi
