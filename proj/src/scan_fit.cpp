#include "ionaddr/scan_fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ionaddr::scan_fit {
namespace {

using rabi::BeamProfileParams;
using rabi::SpamModel;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr int kTraceGridPoints = 2000;
constexpr double kMaxDamping = 1e16;

Vec3 to_vec(const BeamProfileParams& p) { return {p.omega0, p.x_c, p.w0}; }
BeamProfileParams to_params(const Vec3& v) { return {v[0], v[1], v[2]}; }

bool admissible(const Vec3& v) {
  return v.allFinite() && v[0] >= 0.0 && v[2] > 0.0;
}

/// Weighted residuals of the Gaussian-envelope model over a whole scan.
class ScanProblem {
 public:
  ScanProblem(const ScanDataset& data, const SpamModel& spam) : data_(data), spam_(spam) {
    sqrt_w_.reserve(data.records.size());
    for (const auto& r : data.records) sqrt_w_.push_back(std::sqrt(record_weight(r.p1, r.shots)));
  }

  std::size_t size() const { return data_.records.size(); }

  double model(const BeamProfileParams& p, const ScanRecord& r) const {
    return spam_.eps_prep + rabi::spam_gain(spam_) * rabi::p_excited(p, r.position_um, r.duration_s);
  }

  double chi2(const Vec3& v) const {
    const auto p = to_params(v);
    double sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const auto& r = data_.records[i];
      const double res = sqrt_w_[i] * (model(p, r) - r.p1);
      sum += res * res;
    }
    return sum;
  }

  /// Gauss-Newton normal equations H = J^T J, g = J^T r.
  void normal_equations(const Vec3& v, Mat3& h, Vec3& g) const {
    const auto p = to_params(v);
    const double gain = rabi::spam_gain(spam_);
    h.setZero();
    g.setZero();
    for (std::size_t i = 0; i < size(); ++i) {
      const auto& r = data_.records[i];
      const auto grad = rabi::p_excited_gradient(p, r.position_um, r.duration_s);
      const Vec3 j = sqrt_w_[i] * gain * Vec3(grad[0], grad[1], grad[2]);
      const double res = sqrt_w_[i] * (model(p, r) - r.p1);
      h.noalias() += j * j.transpose();
      g.noalias() += j * res;
    }
  }

  double residual_rms(const Vec3& v) const {
    const auto p = to_params(v);
    double sum = 0.0;
    for (const auto& r : data_.records) {
      const double d = model(p, r) - r.p1;
      sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(size()));
  }

  double shot_noise_rms(const Vec3& v) const {
    const auto p = to_params(v);
    double sum = 0.0;
    for (const auto& r : data_.records) {
      const double m = model(p, r);
      sum += m * (1.0 - m) / static_cast<double>(r.shots);
    }
    return std::sqrt(sum / static_cast<double>(size()));
  }

 private:
  const ScanDataset& data_;
  SpamModel spam_;
  std::vector<double> sqrt_w_;
};

struct LmOutcome {
  Vec3 params;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

LmOutcome levenberg_marquardt(const ScanProblem& problem, Vec3 params, const FitOptions& opt) {
  LmOutcome out;
  double chi2 = problem.chi2(params);
  double lambda = 1e-3;
  Mat3 h;
  Vec3 g;
  problem.normal_equations(params, h, g);

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    out.iterations = iter + 1;
    const Vec3 diag = h.diagonal().cwiseMax(std::numeric_limits<double>::min());
    if ((g.array().abs() / diag.array().sqrt()).maxCoeff() < opt.gradient_tolerance) {
      out.converged = true;
      break;
    }

    bool accepted = false;
    while (!accepted) {
      Mat3 damped = h;
      damped.diagonal() += lambda * diag;
      const Vec3 step = damped.ldlt().solve(-g);
      const Vec3 trial = params + step;
      const double trial_chi2 = admissible(trial) ? problem.chi2(trial) : std::numeric_limits<double>::infinity();
      if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
        const Vec3 scale(std::max(std::abs(params[0]), std::numeric_limits<double>::min()),
                         std::max(std::abs(params[1]), params[2]), params[2]);
        const double rel_step = (step.array().abs() / scale.array()).maxCoeff();
        params = trial;
        chi2 = trial_chi2;
        lambda = std::max(lambda * 0.3, 1e-12);
        problem.normal_equations(params, h, g);
        accepted = true;
        if (rel_step < opt.relative_step_tolerance) out.converged = true;
      } else {
        lambda *= 10.0;
        if (lambda > kMaxDamping) {
          // No descent direction left at double precision: a minimum.
          out.converged = true;
          break;
        }
      }
    }
    if (out.converged) break;
  }
  out.params = params;
  out.chi2 = chi2;
  return out;
}

struct TraceModel {
  std::span<const ScanRecord> trace;
  SpamModel spam;
  std::vector<double> weight;

  double chi2(double omega) const {
    double sum = 0.0;
    const double gain = rabi::spam_gain(spam);
    for (std::size_t k = 0; k < trace.size(); ++k) {
      const double s = std::sin(0.5 * omega * trace[k].duration_s);
      const double d = spam.eps_prep + gain * s * s - trace[k].p1;
      sum += weight[k] * d * d;
    }
    return sum;
  }

  /// Returns (sum W J^2, sum W J r).
  std::pair<double, double> normal(double omega) const {
    double hh = 0.0;
    double gg = 0.0;
    const double gain = rabi::spam_gain(spam);
    for (std::size_t k = 0; k < trace.size(); ++k) {
      const double t = trace[k].duration_s;
      const double s = std::sin(0.5 * omega * t);
      const double j = gain * 0.5 * t * std::sin(omega * t);
      const double r = spam.eps_prep + gain * s * s - trace[k].p1;
      hh += weight[k] * j * j;
      gg += weight[k] * j * r;
    }
    return {hh, gg};
  }
};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

Matrix3 to_array(const Mat3& m) {
  Matrix3 out{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out[i][j] = m(i, j);
  }
  return out;
}

std::vector<ScanRecord> nearest_trace(const ScanDataset& data, double x) {
  const auto positions = data.positions();
  double best = positions.front();
  for (double p : positions) {
    if (std::abs(p - x) < std::abs(best - x)) best = p;
  }
  return data.trace_at(best);
}

}  // namespace

double BeamFitResult::sigma(int i) const {
  return std::sqrt(std::max(covariance[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)], 0.0));
}

double record_weight(double p1, long shots) {
  const double n = static_cast<double>(shots);
  return n / (p1 * (1.0 - p1) + 1.0 / (4.0 * n));
}

rabi::BeamProfileParams initial_guess(const ScanDataset& data) {
  const auto positions = data.positions();
  std::vector<double> amplitude;
  amplitude.reserve(positions.size());
  for (double x : positions) {
    const auto trace = data.trace_at(x);
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& r : trace) {
      lo = std::min(lo, r.p1);
      hi = std::max(hi, r.p1);
    }
    amplitude.push_back(trace.size() > 1 ? hi - lo : 0.0);
  }
  const double floor = *std::min_element(amplitude.begin(), amplitude.end());
  double sum = 0.0;
  double moment = 0.0;
  std::size_t peak = 0;
  for (std::size_t i = 0; i < amplitude.size(); ++i) {
    amplitude[i] -= floor;
    sum += amplitude[i];
    moment += amplitude[i] * positions[i];
    if (amplitude[i] > amplitude[peak]) peak = i;
  }
  if (!(sum > 0.0)) throw RankDeficiencyError("scan shows no oscillation at any position");
  const double centroid = moment / sum;

  const double half = 0.5 * amplitude[peak];
  auto crossing = [&](int dir) {
    int i = static_cast<int>(peak);
    while (true) {
      const int next = i + dir;
      if (next < 0 || next >= static_cast<int>(positions.size())) return positions[static_cast<std::size_t>(i)];
      const auto ui = static_cast<std::size_t>(i);
      const auto un = static_cast<std::size_t>(next);
      if (amplitude[un] < half) {
        const double f = (amplitude[ui] - half) / (amplitude[ui] - amplitude[un]);
        return positions[ui] + f * (positions[un] - positions[ui]);
      }
      i = next;
    }
  };
  double fwhm = crossing(+1) - crossing(-1);
  if (!(fwhm > 0.0)) {
    fwhm = positions.size() > 1 ? positions[1] - positions[0] : 1.0;
  }
  const double w0 = fwhm / std::sqrt(2.0 * std::numbers::ln2);

  // Dominant frequency of the trace nearest the centroid, by matched sin^2 scan.
  const auto trace = nearest_trace(data, centroid);
  double omega = fit_trace(trace, SpamModel::none()).omega;
  if (!(omega > 0.0)) {
    const auto durations = data.durations();
    omega = std::numbers::pi / std::max(durations.back(), std::numeric_limits<double>::min());
  }
  // The amplitude profile saturates near the center, so its FWHM overstates w0.
  // Pick the best width on a log grid below that bound.
  const ScanProblem problem(data, SpamModel::none());
  double best_w0 = w0;
  double best_chi2 = problem.chi2(Vec3(omega, centroid, w0));
  constexpr int kWidthSteps = 96;
  for (int k = 0; k < kWidthSteps; ++k) {
    const double w = w0 * std::pow(0.1, static_cast<double>(k + 1) / kWidthSteps);
    const double c = problem.chi2(Vec3(omega, centroid, w));
    if (c < best_chi2) {
      best_chi2 = c;
      best_w0 = w;
    }
  }
  return {omega, centroid, best_w0};
}

FreqPoint fit_trace(std::span<const ScanRecord> trace, const rabi::SpamModel& spam) {
  FreqPoint out;
  out.durations = static_cast<int>(trace.size());
  if (trace.empty()) throw DomainError("fit_trace: empty trace");
  out.position_um = trace.front().position_um;

  TraceModel model{trace, spam, {}};
  model.weight.reserve(trace.size());
  std::vector<double> times;
  for (const auto& r : trace) {
    model.weight.push_back(record_weight(r.p1, r.shots));
    times.push_back(r.duration_s);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.size() < 2 || !(times.back() > 0.0)) {
    throw RankDeficiencyError("fit_trace: need at least two distinct durations");
  }
  double dt = times.back();
  for (std::size_t k = 1; k < times.size(); ++k) dt = std::min(dt, times[k] - times[k - 1]);
  const double omega_max = std::numbers::pi / dt;
  const double grid_step = omega_max / kTraceGridPoints;

  std::vector<double> grid_chi2(kTraceGridPoints + 1);
  std::size_t best = 0;
  for (std::size_t k = 0; k < grid_chi2.size(); ++k) {
    grid_chi2[k] = model.chi2(static_cast<double>(k) * grid_step);
    if (grid_chi2[k] < grid_chi2[best]) best = k;
  }

  // Damped Newton polish inside the neighbouring grid cells.
  double omega = static_cast<double>(best) * grid_step;
  double chi2 = grid_chi2[best];
  const double lo = std::max(0.0, omega - grid_step);
  const double hi = omega + grid_step;
  double lambda = 1e-3;
  for (int iter = 0; iter < 100; ++iter) {
    const auto [hh, gg] = model.normal(omega);
    if (!(hh > 0.0)) break;
    bool accepted = false;
    while (lambda < kMaxDamping) {
      const double trial = std::clamp(omega - gg / (hh * (1.0 + lambda)), lo, hi);
      const double trial_chi2 = model.chi2(trial);
      if (trial_chi2 <= chi2) {
        const double rel = std::abs(trial - omega) / std::max(omega, grid_step);
        omega = trial;
        chi2 = trial_chi2;
        lambda = std::max(lambda * 0.3, 1e-12);
        accepted = rel > 1e-12;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }

  const auto [hh, gg] = model.normal(omega);
  const double curvature_sigma = hh > 0.0 ? 1.0 / std::sqrt(hh) : std::numeric_limits<double>::infinity();

  // Lower profile-likelihood half-width at delta chi2 = 1.
  const double target = chi2 + 1.0;
  double lower_sigma = omega;
  if (model.chi2(0.0) > target) {
    double inside = omega;
    double outside = 0.0;
    for (double w = omega - grid_step; w > 0.0; w -= grid_step) {
      if (model.chi2(w) > target) {
        outside = w;
        break;
      }
      inside = w;
    }
    for (int k = 0; k < 60; ++k) {
      const double mid = 0.5 * (inside + outside);
      (model.chi2(mid) > target ? outside : inside) = mid;
    }
    lower_sigma = omega - 0.5 * (inside + outside);
  }

  out.omega = omega;
  out.uncertainty = std::max(curvature_sigma, lower_sigma);
  out.baseline = out.uncertainty >= out.omega;
  return out;
}

FreqProfile fit_freq_profile(const ScanDataset& data, const rabi::SpamModel& spam) {
  FreqProfile profile;
  for (double x : data.positions()) {
    const auto trace = data.trace_at(x);
    std::vector<double> times;
    for (const auto& r : trace) times.push_back(r.duration_s);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    if (times.size() < 4) {
      profile.warnings.push_back("position " + format_number(x) + " um skipped: " +
                                 std::to_string(times.size()) + " distinct durations (< 4)");
      continue;
    }
    profile.points.push_back(fit_trace(trace, spam));
  }
  return profile;
}

double d4sigma(std::span<const std::pair<double, double>> position_weight) {
  double sum = 0.0;
  double moment = 0.0;
  for (const auto& [x, w] : position_weight) {
    if (w < 0.0 || !std::isfinite(w)) throw DomainError("d4sigma: weights must be finite and >= 0");
    sum += w;
    moment += w * x;
  }
  if (!(sum > 0.0)) throw DomainError("d4sigma: all weights are zero");
  const double mean = moment / sum;
  double var = 0.0;
  for (const auto& [x, w] : position_weight) var += w * (x - mean) * (x - mean);
  return 4.0 * std::sqrt(var / sum);
}

WidthReport width_report(const FreqProfile& profile, double fitted_w0_um) {
  WidthReport out;
  out.w0_um = fitted_w0_um;
  out.two_w0_um = 2.0 * fitted_w0_um;

  std::vector<double> baseline;
  int signal = 0;
  for (const auto& p : profile.points) {
    if (p.baseline) {
      baseline.push_back(p.omega);
    } else {
      ++signal;
    }
  }
  out.baseline_omega = median(baseline);
  if (signal < 3) return out;

  std::vector<std::pair<double, double>> raw;
  std::vector<std::pair<double, double>> subtracted;
  for (const auto& p : profile.points) {
    raw.emplace_back(p.position_um, std::max(p.omega, 0.0));
    subtracted.emplace_back(p.position_um, std::max(p.omega - out.baseline_omega, 0.0));
  }
  out.d4sigma_raw_um = d4sigma(raw);
  out.d4sigma_um = d4sigma(subtracted);
  out.valid = true;
  return out;
}

BeamFitResult fit_beam(const ScanDataset& data, const rabi::SpamModel& spam, const FitOptions& options) {
  spam.validate();
  data.validate_records();
  if (data.records.size() < 12) throw DomainError("fit_beam: need at least 12 records");
  if (data.durations().size() == 1) {
    throw RankDeficiencyError("fit_beam: all durations are equal; omega0 and w0 are not separable");
  }
  data.validate_grid();

  const ScanProblem problem(data, spam);
  const Vec3 start = to_vec(options.initial ? *options.initial : initial_guess(data));
  if (!admissible(start)) throw DomainError("fit_beam: initial parameters are not admissible");

  LmOutcome best = levenberg_marquardt(problem, start, options);
  int starts = 1;
  if (options.multi_start &&
      (!best.converged ||
       problem.residual_rms(best.params) > options.restart_threshold * problem.shot_noise_rms(best.params))) {
    const double f = options.restart_spread;
    const std::array<Vec3, 5> patterns = {Vec3(1 + f, 0, 1), Vec3(1 - f, 0, 1), Vec3(1, f, 1 + f),
                                          Vec3(1, -f, 1 - f), Vec3(1 + f, 0, 1 - f)};
    for (int k = 0; k < options.restarts; ++k) {
      const Vec3& pat = patterns[static_cast<std::size_t>(k) % patterns.size()];
      const double spread = 1.0 + static_cast<double>(k / static_cast<int>(patterns.size()));
      const Vec3 s(start[0] * (1.0 + (pat[0] - 1.0) * spread), start[1] + pat[1] * spread * start[2],
                   start[2] * (1.0 + (pat[2] - 1.0) * spread));
      if (!admissible(s)) continue;
      const LmOutcome trial = levenberg_marquardt(problem, s, options);
      ++starts;
      if ((trial.converged && !best.converged) ||
          (trial.converged == best.converged && trial.chi2 < best.chi2)) {
        best = trial;
      }
    }
  }

  BeamFitResult result;
  result.label = data.label;
  result.params = to_params(best.params);
  result.chi2 = best.chi2;
  result.dof = static_cast<int>(data.records.size()) - 3;
  result.iterations = best.iterations;
  result.starts = starts;
  result.converged = best.converged;
  result.residual_rms = problem.residual_rms(best.params);
  result.shot_noise_rms = problem.shot_noise_rms(best.params);

  Mat3 h;
  Vec3 g;
  problem.normal_equations(best.params, h, g);
  const Vec3 d = h.diagonal().cwiseMax(std::numeric_limits<double>::min()).cwiseSqrt().cwiseInverse();
  const Mat3 scaled = d.asDiagonal() * h * d.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(scaled);
  const double min_ev = eig.eigenvalues().minCoeff();
  const double max_ev = eig.eigenvalues().maxCoeff();
  if (!(min_ev > 1e-12 * max_ev)) {
    result.warnings.push_back("normal matrix is rank deficient at the optimum");
    if (result.converged) {
      throw RankDeficiencyError("fit_beam: parameters are not identifiable from this scan");
    }
  } else {
    const Mat3 cov = d.asDiagonal() * scaled.inverse() * d.asDiagonal();
    result.covariance = to_array(0.5 * (cov + cov.transpose()));
  }

  result.freq_profile = fit_freq_profile(data, spam);
  result.widths = width_report(result.freq_profile, result.params.w0);
  if (!result.widths.valid) {
    result.warnings.push_back("fewer than 3 non-baseline profile points; D4sigma not reported");
  }
  for (const auto& w : result.freq_profile.warnings) result.warnings.push_back(w);

  if (!result.converged) {
    throw ConvergenceError("fit_beam: no convergence after " + std::to_string(options.max_iterations) +
                               " iterations",
                           std::move(result));
  }
  return result;
}

PairReport pair_analysis(const BeamFitResult& a, const BeamFitResult& b,
                         const std::pair<ScanDataset, ScanDataset>& traces_at_centers,
                         double window_s, double floor, const rabi::SpamModel& spam) {
  if (!a.converged || !b.converged) throw DomainError("pair_analysis: both fits must have converged");
  PairReport report;
  report.separation_um = std::abs(b.params.x_c - a.params.x_c);
  report.separation_uncertainty_um = std::sqrt(a.covariance[1][1] + b.covariance[1][1]);
  if (report.separation_um <= report.separation_uncertainty_um) {
    report.warnings.push_back("beam centers overlap within their joint uncertainty");
  }

  const double bound = rabi::crosstalk_rabi_bound(window_s, floor);
  auto check = [&](const BeamFitResult& fit, const ScanDataset& trace, const char* name) {
    NeighborCheck c;
    if (trace.positions().size() > 1) {
      report.warnings.push_back(std::string("neighbor trace for beam ") + name +
                                " spans several positions; fitted as one trace");
    }
    const FreqPoint observed = fit_trace(trace.records, spam);
    c.observed_omega = observed.omega;
    c.observed_uncertainty = observed.uncertainty;
    c.resolved = !observed.baseline;
    c.omega_bound = c.resolved ? std::max(bound, observed.omega + observed.uncertainty) : bound;
    c.crosstalk_bound = rabi::intensity_crosstalk_ratio(c.omega_bound, fit.params.omega0);
    if (c.resolved) {
      report.warnings.push_back(std::string("beam ") + name + " shows a resolvable oscillation at its neighbor");
    }
    return c;
  };
  report.a = check(a, traces_at_centers.first, "A");
  report.b = check(b, traces_at_centers.second, "B");
  return report;
}

}  // namespace ionaddr::scan_fit
