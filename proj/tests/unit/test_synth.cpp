#include <doctest.h>

#include <cmath>

#include "ionaddr/errors.hpp"
#include "ionaddr/philox.hpp"
#include "ionaddr/scan_data.hpp"
#include "ionaddr/synth.hpp"

using namespace ionaddr;

namespace {

synth::SynthConfig beam_a(std::uint64_t seed) {
  synth::SynthConfig cfg;
  cfg.beams = {{"A", {rabi::hz_to_angular(1.91e3), 0.0, 1.86}}};
  cfg.positions_um = synth::linspace(-4.5, 4.5, 61);
  cfg.durations_s = synth::linspace(0.0, 1e-3, 21);
  cfg.shots = 200;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32(0)({0, 0, 0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32(~0ULL)({~0u, ~0u, ~0u, ~0u}) == C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32(0x299f31d0a4093822ULL)({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("analytic mode reproduces the expected probability") {
  auto cfg = beam_a(0);
  cfg.analytic = true;
  const auto data = synth::generate(cfg).front();
  REQUIRE(data.records.size() == 61 * 21);
  for (const auto& r : data.records) {
    CHECK(r.p1 == rabi::apply_spam(rabi::p_excited(cfg.beams[0].params, r.position_um, r.duration_s), cfg.spam));
    CHECK(r.shots == 200);
  }
}

TEST_CASE("generation is deterministic and seed dependent") {
  const auto a = scan_csv_string(synth::generate(beam_a(17)).front());
  const auto b = scan_csv_string(synth::generate(beam_a(17)).front());
  const auto c = scan_csv_string(synth::generate(beam_a(18)).front());
  CHECK(a == b);
  CHECK(a != c);

  // Counter keying: a subgrid draws the same counts at shared cells.
  auto sub = beam_a(17);
  sub.positions_um.resize(30);
  const auto full = synth::generate(beam_a(17)).front();
  const auto part = synth::generate(sub).front();
  for (std::size_t i = 0; i < part.records.size(); ++i) CHECK(part.records[i].p1 == full.records[i].p1);
}

TEST_CASE("two-beam configs emit one dataset per beam") {
  auto cfg = beam_a(1);
  cfg.beams.push_back({"B", {rabi::hz_to_angular(2.79e3), 4.31, 1.88}});
  const auto out = synth::generate(cfg);
  REQUIRE(out.size() == 2);
  CHECK(out[0].label == "A");
  CHECK(out[1].label == "B");
  CHECK(scan_csv_string(out[0]) == scan_csv_string(synth::generate(beam_a(1)).front()));
}

TEST_CASE("sample mean converges to the expected probability") {
  // Coarse grid, 1000 seeds, every point within 3 standard errors.
  auto cfg = beam_a(0);
  cfg.positions_um = {-2.0, -0.5, 0.0, 1.0, 3.0};
  cfg.durations_s = {0.0, 1e-4, 2.6e-4, 7e-4};
  cfg.shots = 50;
  const std::size_t n = cfg.positions_um.size() * cfg.durations_s.size();
  std::vector<double> sum(n, 0.0);
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = static_cast<std::uint64_t>(s);
    const auto d = synth::generate(cfg).front();
    for (std::size_t i = 0; i < n; ++i) sum[i] += d.records[i].p1;
  }
  cfg.analytic = true;
  const auto truth = synth::generate(cfg).front();
  for (std::size_t i = 0; i < n; ++i) {
    const double p = truth.records[i].p1;
    const double se = std::sqrt(p * (1.0 - p) / (cfg.shots * seeds));
    CHECK(std::abs(sum[i] / seeds - p) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("binomial draws stay in range") {
  CHECK(synth::binomial_draw(1, 0, 0, 0, 100, 0.0) == 0);
  CHECK(synth::binomial_draw(1, 0, 0, 0, 100, 1.0) == 100);
  const long k = synth::binomial_draw(1, 2, 3, 0, 1001, 0.5);
  CHECK(k >= 0);
  CHECK(k <= 1001);
}

TEST_CASE("position jitter") {
  const auto data = synth::generate(beam_a(3)).front();
  const auto same = synth::position_jitter(data, 0.0, 9);
  CHECK(scan_csv_string(same) == scan_csv_string(data));

  const auto j = synth::position_jitter(data, 0.19, 9);
  REQUIRE(j.records.size() == data.records.size());
  bool moved = false;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    CHECK(std::abs(j.records[i].position_um - data.records[i].position_um) <= 0.095);
    moved = moved || j.records[i].position_um != data.records[i].position_um;
    CHECK(j.records[i].duration_s == data.records[i].duration_s);
    CHECK(j.records[i].p1 == data.records[i].p1);
    CHECK(j.records[i].shots == data.records[i].shots);
  }
  CHECK(moved);
  // Traces stay grouped: same number of distinct positions, each with all durations.
  CHECK(j.positions().size() == data.positions().size());
  CHECK(j.trace_at(j.positions()[7]).size() == data.durations().size());
  CHECK(scan_csv_string(synth::position_jitter(data, 0.19, 9)) == scan_csv_string(j));
  CHECK_THROWS_AS(synth::position_jitter(data, -1.0, 9), DomainError);
}

TEST_CASE("config validation") {
  auto cfg = beam_a(0);
  cfg.positions_um = {1.0, 0.0};
  CHECK_THROWS_AS(synth::generate(cfg), DomainError);
  cfg = beam_a(0);
  cfg.shots = 0;
  CHECK_THROWS_AS(synth::generate(cfg), DomainError);
  cfg = beam_a(0);
  cfg.beams.clear();
  CHECK_THROWS_AS(synth::generate(cfg), DomainError);
}
