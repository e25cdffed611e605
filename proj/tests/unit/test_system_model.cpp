#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "../support/oracles.hpp"
#include "ionaddr/errors.hpp"
#include "ionaddr/io.hpp"
#include "ionaddr/system_model.hpp"

using namespace ionaddr::system_model;
using ionaddr::beamlab::Axis;

namespace {

const std::string kData = IONADDR_DATA_DIR;

OpticalPrescription reference() { return ionaddr::io::read_prescription_file(kData + "/reference_prescription.json"); }

}  // namespace

TEST_CASE("single Keplerian stage magnification") {
  const auto p = keplerian_relay("75/15", 75.0, 15.0);
  CHECK(magnification(p, Axis::kAxial) == doctest::Approx(15.0 / 75.0).epsilon(1e-12));
  const auto c = solve_conjugate(p, Axis::kAxial);
  CHECK(c.inverted);
  CHECK(c.image_distance_mm == doctest::Approx(15.0));

  const auto unit = keplerian_relay("unit", 100.0, 100.0);
  CHECK(magnification(unit, Axis::kRadial) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reference prescription hits 105x / 21x") {
  const auto p = reference();
  CHECK(1.0 / magnification(p, Axis::kAxial) == doctest::Approx(105.0).epsilon(1e-9));
  CHECK(1.0 / magnification(p, Axis::kRadial) == doctest::Approx(21.0).epsilon(1e-9));

  const auto r = image_array(p, BeamArraySpec{});
  CHECK(r.axial.image_diameter_um == doctest::Approx(200.0 / 105.0).epsilon(1e-9));
  CHECK(r.radial.image_diameter_um == doctest::Approx(200.0 / 21.0).epsilon(1e-9));
  CHECK(r.image_pitch_um == doctest::Approx(450.0 / 105.0).epsilon(1e-9));
  CHECK(r.centers_um.size() == 32);
  // Cylinder pair acts on one axis only, so the radial focus is displaced.
  CHECK(r.astigmatic_offset_mm == doctest::Approx(-180.0 / 441.0).epsilon(1e-9));
  CHECK(r.radial_diameter_at_axial_image_um > r.radial.image_diameter_um);
}

TEST_CASE("image_array geometry") {
  const auto unit = ionaddr::io::read_prescription_file(kData + "/unit_relay.json");
  const auto r = image_array(unit, BeamArraySpec{});
  CHECK(r.image_pitch_um == doctest::Approx(450.0));
  CHECK(r.axial.image_diameter_um == doctest::Approx(200.0));
  CHECK(r.radial.image_diameter_um == doctest::Approx(200.0));

  const auto first = ionaddr::io::read_prescription_file(kData + "/first_telescope.json");
  CHECK(image_array(first, BeamArraySpec{}).image_pitch_um == doctest::Approx(44.5).epsilon(1e-12));

  BeamArraySpec single;
  single.channel_count = 1;
  const auto one = image_array(reference(), single);
  REQUIRE(one.centers_um.size() == 1);
  CHECK(one.centers_um[0] == 0.0);

  // Centers are affine in the channel index and agree with a traced chief ray.
  const auto full = image_array(reference(), BeamArraySpec{});
  const auto m = solve_conjugate(reference(), Axis::kAxial).object_to_image;
  for (std::size_t i = 0; i < full.centers_um.size(); ++i) {
    const double x_src = (static_cast<double>(i) - 15.5) * 450.0;
    CHECK(full.centers_um[i] == doctest::Approx(m.a * x_src + m.b * 0.0).epsilon(1e-12));
    if (i > 0) CHECK(std::abs(full.centers_um[i] - full.centers_um[i - 1]) == doctest::Approx(full.image_pitch_um));
  }

  BeamArraySpec bad;
  bad.channel_count = 0;
  CHECK_THROWS_AS(image_array(reference(), bad), ionaddr::DomainError);
}

TEST_CASE("pitch scaling and cascade consistency on random conjugate chains") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> focal(10.0, 250.0);
  std::uniform_real_distribution<double> gap(20.0, 400.0);
  for (int trial = 0; trial < 200; ++trial) {
    // Random single-lens imaging stages (object beyond f so the image is real).
    auto stage = [&](const std::string& name) {
      const double f = focal(rng);
      return OpticalPrescription(name, {{ElementKind::kGap, f + gap(rng)}, {ElementKind::kLens, f}});
    };
    const auto s1 = stage("s1");
    const auto s2 = stage("s2");
    const auto s3 = stage("s3");
    const auto chain = s1.then(s2).then(s3);
    const double product = magnification(s1, Axis::kAxial) * magnification(s2, Axis::kAxial) *
                           magnification(s3, Axis::kAxial);
    CHECK(magnification(chain, Axis::kAxial) == doctest::Approx(product).epsilon(1e-9));

    BeamArraySpec arr;
    arr.pitch_um = 100.0 + 500.0 * std::generate_canonical<double, 53>(rng);
    const auto r = image_array(chain, arr);
    CHECK(r.image_pitch_um / magnification(chain, Axis::kAxial) == doctest::Approx(arr.pitch_um).epsilon(1e-9));
  }
}

TEST_CASE("4f relay: Gaussian propagation agrees with the magnification shortcut") {
  for (auto [f1, f2] : {std::pair{75.0, 15.0}, std::pair{40.0, 160.0}, std::pair{101.0, 10.0}}) {
    const auto p = keplerian_relay("relay", f1, f2);
    BeamArraySpec arr;
    const auto r = image_array(p, arr);
    CHECK(r.axial.image_diameter_um == doctest::Approx(arr.source_diameter_um * f2 / f1).epsilon(1e-9));
    CHECK(std::abs(r.axial.waist_offset_mm) < 1e-9);
  }
}

TEST_CASE("no finite image plane") {
  // Object on the front focal plane of a single lens images to infinity.
  const OpticalPrescription p("collimator", {{ElementKind::kGap, 50.0}, {ElementKind::kLens, 50.0}});
  CHECK_THROWS_AS(magnification(p, Axis::kAxial), ionaddr::SingularityError);
  CHECK_THROWS_AS(OpticalPrescription("no radial", {{ElementKind::kGap, 10.0},
                                                    {ElementKind::kLens, 50.0, AppliesTo::kAxial}}),
                  ionaddr::DomainError);
}

TEST_CASE("compare_measured_pitch") {
  const auto fig3 = compare_measured_pitch(44.5, 48.3, 0.12);
  CHECK(fig3.relative == doctest::Approx(0.0854).epsilon(1e-3));
  CHECK_FALSE(fig3.within);

  const auto same = compare_measured_pitch(44.5, 44.5, 0.12);
  CHECK(same.absolute_um == 0.0);
  CHECK(same.within);

  const auto ion = compare_measured_pitch(450.0 / 105.0, 4.31, 0.19, 1.0);
  CHECK(ion.within);
  CHECK(ion.sigmas < 1.0);

  CHECK_THROWS_AS(compare_measured_pitch(44.5, 48.3, 0.0), ionaddr::DomainError);
}

TEST_CASE("prescription JSON schema errors name the offending field") {
  using ionaddr::io::json;
  auto message = [](const json& j) {
    try {
      ionaddr::io::prescription_from_json(j);
    } catch (const ionaddr::ParseError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(json{{"elements", json::array()}}).find("/name") != std::string::npos);
  const json bad_kind = {{"name", "x"}, {"elements", {{{"kind", "mirror"}, {"value_mm", 1}}}}};
  CHECK(message(bad_kind).find("/elements/0/kind") != std::string::npos);
  const json bad_value = {{"name", "x"}, {"elements", {{{"kind", "lens"}, {"value_mm", "ten"}}}}};
  CHECK(message(bad_value).find("/elements/0/value_mm") != std::string::npos);
  const json bad_axis = {{"name", "x"}, {"elements", {{{"kind", "lens"}, {"value_mm", 5}, {"axis", "z"}}}}};
  CHECK(message(bad_axis).find("/elements/0/axis") != std::string::npos);

  const auto p = reference();
  const auto again = ionaddr::io::prescription_from_json(ionaddr::io::to_json(p));
  CHECK(magnification(again, Axis::kAxial) == magnification(p, Axis::kAxial));
}
