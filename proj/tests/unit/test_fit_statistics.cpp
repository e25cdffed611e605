#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "../support/scenarios.hpp"
#include "ionaddr/scan_fit.hpp"
#include "ionaddr/synth.hpp"

using namespace ionaddr;
using scenario::rel_err;

namespace {

std::array<double, 3> as_array(const rabi::BeamProfileParams& p) { return {p.omega0, p.x_c, p.w0}; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("reported covariance is calibrated against the empirical scatter") {
  const auto truth = scenario::beam_a();
  const int trials = 100;
  std::array<std::vector<double>, 3> values;
  std::array<double, 3> reported_var{};
  for (int s = 0; s < trials; ++s) {
    const auto fit = scan_fit::fit_beam(synth::generate(scenario::scan_config(truth, 1000 + s)).front(), {});
    const auto p = as_array(fit.params);
    for (int i = 0; i < 3; ++i) {
      values[i].push_back(p[i]);
      reported_var[i] += fit.covariance[i][i] / trials;
    }
  }
  for (int i = 0; i < 3; ++i) {
    double mean = 0.0;
    for (double v : values[i]) mean += v / trials;
    double var = 0.0;
    for (double v : values[i]) var += (v - mean) * (v - mean) / (trials - 1);
    const double ratio = std::sqrt(var / reported_var[i]);
    CAPTURE(i);
    CAPTURE(ratio);
    CHECK(ratio > 0.5);
    CHECK(ratio < 2.0);
  }
}

TEST_CASE("doubling shots does not increase the median error") {
  const auto truth = scenario::beam_a();
  const auto t = as_array(truth);
  std::array<std::vector<double>, 3> err200, err400;
  for (int s = 0; s < 50; ++s) {
    for (int shots : {200, 400}) {
      auto cfg = scenario::scan_config(truth, 5000 + s);
      cfg.shots = shots;
      const auto p = as_array(scan_fit::fit_beam(synth::generate(cfg).front(), {}).params);
      auto& bucket = shots == 200 ? err200 : err400;
      for (int i = 0; i < 3; ++i) bucket[i].push_back(std::abs(p[i] - t[i]));
    }
  }
  for (int i = 0; i < 3; ++i) {
    CAPTURE(i);
    CHECK(median(err400[i]) <= 1.1 * median(err200[i]));
  }
}

TEST_CASE("position jitter at 0.19 um barely biases the fitted width") {
  const auto truth = scenario::beam_a();
  double mean_w0 = 0.0;
  const int trials = 100;
  for (int s = 0; s < trials; ++s) {
    const auto data = synth::generate(scenario::scan_config(truth, 9000 + s)).front();
    const auto jittered = synth::position_jitter(data, 0.19, 9000 + s);
    mean_w0 += scan_fit::fit_beam(jittered, {}).params.w0 / trials;
  }
  CHECK(rel_err(mean_w0, truth.w0) < 0.03);
}
