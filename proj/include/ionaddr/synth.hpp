#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ionaddr/rabi.hpp"
#include "ionaddr/scan_data.hpp"

namespace ionaddr::synth {

struct BeamTruth {
  std::string label = "A";
  rabi::BeamProfileParams params;
};

struct SynthConfig {
  /// One dataset is emitted per beam; beams are driven one at a time.
  std::vector<BeamTruth> beams;
  std::vector<double> positions_um;
  std::vector<double> durations_s;
  long shots = 200;
  rabi::SpamModel spam;
  std::uint64_t seed = 0;
  /// Emit the exact expected probability instead of sampling.
  bool analytic = false;
  double position_resolution_um = 0.0;

  void validate() const;
};

/// Uniform grid helper: `count` points from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, int count);

std::vector<ScanDataset> generate(const SynthConfig& cfg);

/// Binomial(shots, p) drawn as a sum of Bernoulli trials from the counter
/// stream (seed, cell_a, cell_b, stream).
long binomial_draw(std::uint64_t seed, std::uint32_t cell_a, std::uint32_t cell_b,
                   std::uint32_t stream, long shots, double p);

/// Perturbs recorded positions by U(-resolution/2, resolution/2), one draw per
/// distinct recorded position. All other fields are preserved.
ScanDataset position_jitter(const ScanDataset& data, double resolution_um, std::uint64_t seed);

}  // namespace ionaddr::synth
