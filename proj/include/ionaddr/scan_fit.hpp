#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ionaddr/errors.hpp"
#include "ionaddr/rabi.hpp"
#include "ionaddr/scan_data.hpp"

namespace ionaddr::scan_fit {

using Matrix3 = std::array<std::array<double, 3>, 3>;

struct FitOptions {
  int max_iterations = 200;
  double relative_step_tolerance = 1e-10;
  double gradient_tolerance = 1e-12;
  bool multi_start = true;
  int restarts = 5;
  double restart_spread = 0.2;
  /// Trigger for the multi-start fallback, in units of the shot-noise RMS.
  double restart_threshold = 2.0;
  /// Optional starting point; skips the data-driven initialization.
  std::optional<rabi::BeamProfileParams> initial;
};

/// Rabi frequency fitted to the trace at one position.
struct FreqPoint {
  double position_um = 0.0;
  double omega = 0.0;
  double uncertainty = 0.0;
  /// Omega indistinguishable from zero (uncertainty >= omega).
  bool baseline = false;
  int durations = 0;
};

struct FreqProfile {
  std::vector<FreqPoint> points;
  /// Positions skipped for having fewer than 4 durations.
  std::vector<std::string> warnings;
};

/// Both width conventions for one beam.
struct WidthReport {
  /// Fitted Gaussian w0 and its 2*w0 second-moment equivalent.
  double w0_um = 0.0;
  double two_w0_um = 0.0;
  /// Second moment over every profile point, no background handling.
  double d4sigma_raw_um = 0.0;
  /// Second moment after subtracting the median baseline omega, negatives clamped.
  double d4sigma_um = 0.0;
  double baseline_omega = 0.0;
  bool valid = false;
};

struct BeamFitResult {
  std::string label;
  rabi::BeamProfileParams params;
  Matrix3 covariance{};
  /// RMS of (model - p1), unweighted.
  double residual_rms = 0.0;
  /// Expected RMS from binomial noise at the fitted model.
  double shot_noise_rms = 0.0;
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;
  int starts = 1;
  bool converged = false;
  FreqProfile freq_profile;
  WidthReport widths;
  std::vector<std::string> warnings;

  double sigma(int i) const;
};

class RankDeficiencyError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Thrown when the optimizer runs out of iterations; carries the best point.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, BeamFitResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const BeamFitResult& best() const noexcept { return best_; }

 private:
  BeamFitResult best_;
};

/// shots / (p (1 - p) + 1 / (4 shots)).
double record_weight(double p1, long shots);

/// Deterministic start: amplitude centroid, dominant frequency at the centroid,
/// width from the amplitude FWHM refined by a chi^2 scan below it.
rabi::BeamProfileParams initial_guess(const ScanDataset& data);

/// Weighted least-squares fit of apply_spam(p_excited) over (omega0, x_c, w0).
BeamFitResult fit_beam(const ScanDataset& data, const rabi::SpamModel& spam,
                       const FitOptions& options = {});

/// Single-parameter fit of apply_spam(sin^2(omega t / 2)) to one trace.
FreqPoint fit_trace(std::span<const ScanRecord> trace, const rabi::SpamModel& spam);
FreqProfile fit_freq_profile(const ScanDataset& data, const rabi::SpamModel& spam);

/// 4 sigma of a non-negatively weighted position distribution.
double d4sigma(std::span<const std::pair<double, double>> position_weight);
/// Raw and baseline-subtracted D4sigma of a fitted profile.
WidthReport width_report(const FreqProfile& profile, double fitted_w0_um);

struct NeighborCheck {
  /// Omega fitted to the neighbor's-center trace while this beam drives.
  double observed_omega = 0.0;
  double observed_uncertainty = 0.0;
  bool resolved = false;
  /// Rabi-frequency bound used for the ratio.
  double omega_bound = 0.0;
  /// Bound on this beam's intensity at the neighbor relative to its peak.
  double crosstalk_bound = 0.0;
};

struct PairReport {
  double separation_um = 0.0;
  double separation_uncertainty_um = 0.0;
  NeighborCheck a;
  NeighborCheck b;
  std::vector<std::string> warnings;
};

/// `spill_a` is measured at beam B's center while beam A drives; `spill_b`
/// at beam A's center while B drives.
PairReport pair_analysis(const BeamFitResult& a, const BeamFitResult& b,
                         const std::pair<ScanDataset, ScanDataset>& traces_at_centers,
                         double window_s, double floor, const rabi::SpamModel& spam = {});

}  // namespace ionaddr::scan_fit
