#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "../support/oracles.hpp"
#include "../support/scenarios.hpp"
#include "ionaddr/errors.hpp"
#include "ionaddr/scan_fit.hpp"
#include "ionaddr/synth.hpp"

using namespace ionaddr;
using namespace ionaddr::scan_fit;
using scenario::rel_err;

namespace {

ScanDataset make(const synth::SynthConfig& cfg) { return synth::generate(cfg).front(); }

ScanDataset noiseless(const rabi::BeamProfileParams& truth, int positions = 61, double span = 4.5) {
  auto cfg = scenario::scan_config(truth, 0);
  cfg.positions_um = synth::linspace(truth.x_c - span, truth.x_c + span, positions);
  cfg.analytic = true;
  return make(cfg);
}

}  // namespace

TEST_CASE("noiseless data is recovered exactly") {
  for (const auto& truth : {scenario::beam_a(), scenario::beam_b()}) {
    const auto fit = fit_beam(noiseless(truth), {});
    CHECK(fit.converged);
    CHECK(rel_err(fit.params.omega0, truth.omega0) < 1e-6);
    CHECK(std::abs(fit.params.x_c - truth.x_c) < 1e-6 * truth.w0);
    CHECK(rel_err(fit.params.w0, truth.w0) < 1e-6);
    CHECK(fit.residual_rms < 1e-8);
  }
}

TEST_CASE("beam A and beam B recovery at 200 shots") {
  for (const auto& truth : {scenario::beam_a(), scenario::beam_b()}) {
    const auto fit = fit_beam(make(scenario::scan_config(truth, 42)), {});
    CHECK(fit.converged);
    CHECK(rel_err(fit.params.omega0, truth.omega0) < 0.02);
    CHECK(std::abs(fit.params.x_c - truth.x_c) < 0.02 * truth.w0);
    CHECK(rel_err(fit.params.w0, truth.w0) < 0.02);
    // Covariance is symmetric positive semidefinite.
    for (int i = 0; i < 3; ++i) {
      CHECK(fit.covariance[i][i] > 0.0);
      for (int j = 0; j < 3; ++j) CHECK(fit.covariance[i][j] == doctest::Approx(fit.covariance[j][i]));
    }
    const auto& c = fit.covariance;
    const double det = c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) -
                       c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0]) +
                       c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
    CHECK(det > 0.0);
  }
}

TEST_CASE("initial guess lands near the truth") {
  const auto g = initial_guess(make(scenario::scan_config(scenario::beam_a(), 5)));
  CHECK(std::abs(g.x_c) < 0.3);
  CHECK(g.w0 > 1.0);
  CHECK(g.w0 < 5.0);
  CHECK(rel_err(g.omega0, scenario::beam_a().omega0) < 0.15);
}

TEST_CASE("per-position frequency profile") {
  const auto truth = scenario::beam_a();
  // Grid containing x_c, x_c +/- w0/2 and x_c + 3 w0.
  auto cfg = scenario::scan_config(truth, 8);
  cfg.positions_um = {-3 * truth.w0, -truth.w0 / 2, 0.0, truth.w0 / 2, 3 * truth.w0};
  for (bool analytic : {true, false}) {
    cfg.analytic = analytic;
    const auto profile = fit_freq_profile(make(cfg), {});
    REQUIRE(profile.points.size() == 5);
    const auto& center = profile.points[2];
    CHECK(!center.baseline);
    CHECK(center.omega == doctest::Approx(truth.omega0).epsilon(analytic ? 1e-6 : 0.02));
    CHECK(profile.points[4].baseline);
    CHECK(profile.points[0].baseline);
    for (int k : {1, 3}) {
      const auto& p = profile.points[static_cast<std::size_t>(k)];
      const double expect = truth.omega0 * std::exp(-0.5);
      CHECK(std::abs(p.omega - expect) <= (analytic ? 1e-6 * expect : 3.0 * p.uncertainty));
    }
  }
}

TEST_CASE("noisy wings are mostly flagged as baseline") {
  const auto truth = scenario::beam_a();
  auto cfg = scenario::scan_config(truth, 21);
  cfg.positions_um = synth::linspace(3 * truth.w0, 3 * truth.w0 + 3.0, 31);
  const auto profile = fit_freq_profile(make(cfg), {});
  const auto flagged = std::count_if(profile.points.begin(), profile.points.end(), [](const auto& p) { return p.baseline; });
  CHECK(flagged >= 22);
}

TEST_CASE("positions with fewer than 4 durations are skipped with a warning") {
  auto data = noiseless(scenario::beam_a(), 9);
  data.records.push_back({10.0, 1e-4, 0.01, 200});
  data.records.push_back({10.0, 2e-4, 0.01, 200});
  const auto profile = fit_freq_profile(data, {});
  CHECK(profile.points.size() == 9);
  REQUIRE(profile.warnings.size() == 1);
  CHECK(profile.warnings[0].find("10") != std::string::npos);
}

TEST_CASE("d4sigma definitions") {
  const std::vector<std::pair<double, double>> two = {{-0.7, 1.0}, {0.7, 1.0}};
  CHECK(d4sigma(two) == doctest::Approx(4.0 * 0.7));

  // Dense sampling of the exact profile vs the continuous second moment.
  const double w0 = 1.86;
  const auto profile = [&](double x) { return std::exp(-2.0 * x * x / (w0 * w0)); };
  const double m0 = oracle::simpson(profile, -6 * w0, 6 * w0, 4000);
  const double m2 = oracle::simpson([&](double x) { return x * x * profile(x); }, -6 * w0, 6 * w0, 4000);
  const double continuous = 4.0 * std::sqrt(m2 / m0);
  CHECK(continuous == doctest::Approx(2.0 * w0).epsilon(1e-9));

  std::vector<std::pair<double, double>> sampled;
  for (double x = -3 * w0; x <= 3 * w0 + 1e-12; x += w0 / 20) sampled.emplace_back(x, profile(x));
  CHECK(d4sigma(sampled) == doctest::Approx(2.0 * w0).epsilon(0.005));

  CHECK_THROWS_AS(d4sigma(std::vector<std::pair<double, double>>{{0.0, 0.0}, {1.0, 0.0}}), DomainError);
  CHECK_THROWS_AS(d4sigma(std::vector<std::pair<double, double>>{{0.0, -1.0}, {1.0, 2.0}}), DomainError);
}

TEST_CASE("fitted profile second moment matches 2 w0 on noiseless dense data") {
  const auto truth = scenario::beam_a();
  // step <= w0 / 10 and range +/- 3 w0.
  const int n = 61;
  const auto fit = fit_beam(noiseless(truth, n, 3.0 * truth.w0), {});
  REQUIRE(fit.widths.valid);
  CHECK(fit.widths.d4sigma_um == doctest::Approx(2.0 * fit.params.w0).epsilon(0.01));
  CHECK(fit.widths.two_w0_um == doctest::Approx(2.0 * fit.params.w0));
}

TEST_CASE("shift and scale equivariance") {
  const auto data = make(scenario::scan_config(scenario::beam_a(), 13));
  const auto base = fit_beam(data, {});

  auto shifted = data;
  for (auto& r : shifted.records) r.position_um += 2.75;
  const auto s = fit_beam(shifted, {});
  CHECK(s.params.x_c == doctest::Approx(base.params.x_c + 2.75).epsilon(1e-7));
  CHECK(s.params.omega0 == doctest::Approx(base.params.omega0).epsilon(1e-7));
  CHECK(s.params.w0 == doctest::Approx(base.params.w0).epsilon(1e-7));
  CHECK(s.widths.d4sigma_um == doctest::Approx(base.widths.d4sigma_um).epsilon(1e-6));

  auto scaled = data;
  for (auto& r : scaled.records) r.duration_s *= 3.0;
  const auto k = fit_beam(scaled, {});
  CHECK(k.params.omega0 == doctest::Approx(base.params.omega0 / 3.0).epsilon(1e-7));
  CHECK(k.params.x_c == doctest::Approx(base.params.x_c).epsilon(1e-7).scale(1.0));
  CHECK(k.params.w0 == doctest::Approx(base.params.w0).epsilon(1e-7));
}

TEST_CASE("fit_beam error paths") {
  auto data = noiseless(scenario::beam_a(), 13);
  auto flat = data;
  for (auto& r : flat.records) r.duration_s = 1e-4;
  CHECK_THROWS_AS(fit_beam(flat, {}), RankDeficiencyError);

  ScanDataset tiny;
  tiny.records.assign(data.records.begin(), data.records.begin() + 11);
  CHECK_THROWS_AS(fit_beam(tiny, {}), DomainError);

  FitOptions one_step;
  one_step.max_iterations = 1;
  one_step.multi_start = false;
  one_step.initial = rabi::BeamProfileParams{scenario::beam_a().omega0 * 1.1, 0.3, 2.2};
  try {
    fit_beam(make(scenario::scan_config(scenario::beam_a(), 2)), {}, one_step);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK_FALSE(e.best().converged);
    CHECK(e.best().iterations == 1);
    CHECK(e.best().params.w0 > 0.0);
  }
}

TEST_CASE("pair analysis") {
  const auto a = fit_beam(make(scenario::scan_config(scenario::beam_a(), 31, "A")), {});
  const auto b = fit_beam(make(scenario::scan_config(scenario::beam_b(), 32, "B")), {});
  // A drives while the ion sits on B's center, and vice versa.
  const auto spill_a = make(scenario::trace_config(scenario::beam_a(), 4.31, 2.5e-3, 33));
  const auto spill_b = make(scenario::trace_config(scenario::beam_b(), 0.0, 2.5e-3, 34));
  const auto report = pair_analysis(a, b, {spill_a, spill_b}, 2.5e-3, 0.01);
  CHECK(report.separation_um == doctest::Approx(4.31).epsilon(0.05 / 4.31));
  CHECK(report.separation_uncertainty_um > 0.0);
  CHECK(report.warnings.empty());
  CHECK_FALSE(report.a.resolved);
  CHECK_FALSE(report.b.resolved);
  CHECK(report.a.crosstalk_bound ==
        doctest::Approx(rabi::crosstalk_rabi_bound(2.5e-3, 0.01) / a.params.omega0).epsilon(1e-12));

  BeamFitResult ref = b;
  ref.params.omega0 = rabi::hz_to_angular(2.12e3);
  const auto r2 = pair_analysis(a, ref, {spill_a, spill_b}, 2.5e-3, 0.01);
  CHECK(r2.b.crosstalk_bound == doctest::Approx(0.0060).epsilon(0.01));

  const auto same = pair_analysis(a, a, {spill_a, spill_a}, 2.5e-3, 0.01);
  CHECK(same.separation_um == 0.0);
  CHECK_FALSE(same.warnings.empty());

  // A neighbor that really spills shows up as resolved.
  const rabi::BeamProfileParams wide{scenario::beam_a().omega0, 0.0, 6.0};
  const auto leaky = make(scenario::trace_config(wide, 4.31, 2.5e-3, 35));
  const auto r3 = pair_analysis(a, b, {leaky, spill_b}, 2.5e-3, 0.01);
  CHECK(r3.a.resolved);
  CHECK(r3.a.omega_bound > rabi::crosstalk_rabi_bound(2.5e-3, 0.01));

  BeamFitResult unconverged = a;
  unconverged.converged = false;
  CHECK_THROWS_AS(pair_analysis(unconverged, b, {spill_a, spill_b}, 2.5e-3, 0.01), DomainError);
}
