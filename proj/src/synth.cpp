#include "ionaddr/synth.hpp"

#include <cmath>
#include <map>

#include "ionaddr/errors.hpp"
#include "ionaddr/philox.hpp"

namespace ionaddr::synth {
namespace {

constexpr long kMaxShots = 10'000'000;
constexpr std::uint32_t kJitterStream = 0x4A175E7u;

void require_increasing(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) throw DomainError(std::string("synth: empty ") + name + " grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw DomainError(std::string("synth: non-finite ") + name);
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw DomainError(std::string("synth: ") + name + " grid must be strictly increasing");
    }
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (beams.empty()) throw DomainError("synth: at least one beam is required");
  for (const auto& b : beams) b.params.validate();
  require_increasing(positions_um, "position");
  require_increasing(durations_s, "duration");
  if (durations_s.front() < 0.0) throw DomainError("synth: durations must be >= 0");
  if (shots < 1 || shots > kMaxShots) throw DomainError("synth: shots must lie in [1, 1e7]");
  if (!(position_resolution_um >= 0.0)) throw DomainError("synth: resolution must be >= 0");
  spam.validate();
}

std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 1) throw DomainError("linspace: count must be >= 1");
  if (count == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(count));
  const double step = (hi - lo) / (count - 1);
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = lo + i * step;
  out.back() = hi;
  return out;
}

long binomial_draw(std::uint64_t seed, std::uint32_t cell_a, std::uint32_t cell_b,
                   std::uint32_t stream, long shots, double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return shots;
  const Philox4x32 rng(seed);
  long hits = 0;
  for (long i = 0; i < shots; i += 2) {
    const auto u = rng.uniforms({cell_a, cell_b, static_cast<std::uint32_t>(i / 2), stream});
    hits += u[0] < p;
    if (i + 1 < shots) hits += u[1] < p;
  }
  return hits;
}

std::vector<ScanDataset> generate(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<ScanDataset> out;
  out.reserve(cfg.beams.size());
  for (std::size_t b = 0; b < cfg.beams.size(); ++b) {
    const auto& beam = cfg.beams[b];
    ScanDataset data;
    data.label = beam.label;
    data.position_resolution_um = cfg.position_resolution_um;
    data.records.reserve(cfg.positions_um.size() * cfg.durations_s.size());
    for (std::size_t i = 0; i < cfg.positions_um.size(); ++i) {
      for (std::size_t j = 0; j < cfg.durations_s.size(); ++j) {
        const double x = cfg.positions_um[i];
        const double t = cfg.durations_s[j];
        const double p = rabi::apply_spam(rabi::p_excited(beam.params, x, t), cfg.spam);
        double p1 = p;
        if (!cfg.analytic) {
          const long k = binomial_draw(cfg.seed, static_cast<std::uint32_t>(i),
                                       static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(b),
                                       cfg.shots, p);
          p1 = static_cast<double>(k) / static_cast<double>(cfg.shots);
        }
        data.records.push_back({x, t, p1, cfg.shots});
      }
    }
    out.push_back(std::move(data));
  }
  return out;
}

ScanDataset position_jitter(const ScanDataset& data, double resolution_um, std::uint64_t seed) {
  if (!(resolution_um >= 0.0)) throw DomainError("position_jitter: resolution must be >= 0");
  ScanDataset out = data;
  if (resolution_um == 0.0) return out;
  // One offset per stage setpoint; every duration at that setpoint shares it.
  const Philox4x32 rng(seed);
  const auto setpoints = data.positions();
  std::map<double, double> offset;
  for (std::size_t i = 0; i < setpoints.size(); ++i) {
    const auto u = rng.uniforms({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32),
                                 0u, kJitterStream});
    offset[setpoints[i]] = (u[0] - 0.5) * resolution_um;
  }
  for (auto& r : out.records) r.position_um += offset.at(r.position_um);
  out.position_resolution_um = resolution_um;
  return out;
}

}  // namespace ionaddr::synth
