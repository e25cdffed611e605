#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "ionaddr/rabi.hpp"
#include "ionaddr/synth.hpp"

namespace scenario {

inline ionaddr::rabi::BeamProfileParams beam_a() { return {ionaddr::rabi::hz_to_angular(1.91e3), 0.0, 1.86}; }
inline ionaddr::rabi::BeamProfileParams beam_b() { return {ionaddr::rabi::hz_to_angular(2.79e3), 4.31, 1.88}; }

/// 61 positions over center +/- 4.5 um, 21 durations over 0..1 ms, 200 shots.
inline ionaddr::synth::SynthConfig scan_config(const ionaddr::rabi::BeamProfileParams& truth, std::uint64_t seed,
                                               const std::string& label = "A") {
  ionaddr::synth::SynthConfig cfg;
  cfg.beams = {{label, truth}};
  cfg.positions_um = ionaddr::synth::linspace(truth.x_c - 4.5, truth.x_c + 4.5, 61);
  cfg.durations_s = ionaddr::synth::linspace(0.0, 1e-3, 21);
  cfg.shots = 200;
  cfg.seed = seed;
  return cfg;
}

/// Trace at a single position with durations up to `window_s`.
inline ionaddr::synth::SynthConfig trace_config(const ionaddr::rabi::BeamProfileParams& driving, double at_um,
                                                double window_s, std::uint64_t seed) {
  ionaddr::synth::SynthConfig cfg;
  cfg.beams = {{"trace", driving}};
  cfg.positions_um = {at_um};
  cfg.durations_s = ionaddr::synth::linspace(0.0, window_s, 26);
  cfg.shots = 200;
  cfg.seed = seed;
  return cfg;
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace scenario
