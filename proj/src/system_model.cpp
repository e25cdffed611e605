#include "ionaddr/system_model.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "ionaddr/errors.hpp"

namespace ionaddr::system_model {
namespace {

constexpr double kMmPerUm = 1e-3;

bool is_lens_on(const Element& e, Axis axis) {
  return e.kind == ElementKind::kLens && e.acts_on(axis);
}

AxisImage image_axis(const OpticalPrescription& p, const beamlab::GaussianBeamState& source,
                     Axis axis) {
  const Conjugate conj = solve_conjugate(p, axis);
  const auto image = beamlab::propagate(source, conj.object_to_image, axis);
  AxisImage out;
  out.axis = axis;
  out.magnification = conj.magnification;
  out.inverted = conj.inverted;
  out.image_distance_mm = conj.image_distance_mm;
  out.image_diameter_um = 2.0 * beamlab::spot_radius_at(image, 0.0, axis);
  out.waist_diameter_um = 2.0 * image.axis(axis).waist_radius_um;
  out.waist_offset_mm = image.axis(axis).waist_position_mm;
  return out;
}

}  // namespace

bool Element::acts_on(Axis axis) const {
  switch (applies_to) {
    case AppliesTo::kBoth:
      return true;
    case AppliesTo::kAxial:
      return axis == Axis::kAxial;
    case AppliesTo::kRadial:
      return axis == Axis::kRadial;
  }
  return false;
}

OpticalPrescription::OpticalPrescription(std::string name, std::vector<Element> elements,
                                         std::string source_plane_label,
                                         std::string image_plane_label)
    : name_(std::move(name)),
      elements_(std::move(elements)),
      source_label_(std::move(source_plane_label)),
      image_label_(std::move(image_plane_label)) {
  for (const auto& e : elements_) {
    if (!std::isfinite(e.value_mm)) {
      throw DomainError("prescription '" + name_ + "': element values must be finite");
    }
    if (e.kind == ElementKind::kLens && e.value_mm == 0.0) {
      throw DomainError("prescription '" + name_ + "': lens focal length must be nonzero");
    }
  }
  for (Axis axis : {Axis::kAxial, Axis::kRadial}) {
    bool has_lens = false;
    for (const auto& e : elements_) has_lens = has_lens || is_lens_on(e, axis);
    if (!has_lens) {
      throw DomainError("prescription '" + name_ + "': no lens on the " +
                        beamlab::to_string(axis) + " axis");
    }
  }
}

std::vector<RayMatrix> OpticalPrescription::axis_matrices(Axis axis) const {
  std::vector<RayMatrix> out;
  std::size_t last = 0;
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    if (is_lens_on(elements_[i], axis)) last = i;
  }
  for (std::size_t i = 0; i <= last; ++i) {
    const auto& e = elements_[i];
    if (!e.acts_on(axis)) continue;
    out.push_back(e.kind == ElementKind::kLens ? beamlab::thin_lens(e.value_mm)
                                               : beamlab::free_space(e.value_mm));
  }
  return out;
}

RayMatrix OpticalPrescription::system_matrix(Axis axis) const {
  const auto ms = axis_matrices(axis);
  return beamlab::compose(ms);
}

double OpticalPrescription::last_lens_position_mm(Axis axis) const {
  double z = 0.0;
  double at_last = 0.0;
  for (const auto& e : elements_) {
    if (!e.acts_on(axis)) continue;
    if (e.kind == ElementKind::kGap) {
      z += e.value_mm;
    } else {
      at_last = z;
    }
  }
  return at_last;
}

OpticalPrescription OpticalPrescription::then(const OpticalPrescription& next) const {
  // Gaps are always laid out on both axes so positions stay common.
  std::size_t last_lens = 0;
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    if (elements_[i].kind == ElementKind::kLens) last_lens = i;
  }
  std::vector<Element> joined(elements_.begin(), elements_.begin() + last_lens + 1);
  double z_last = 0.0;
  for (std::size_t i = 0; i <= last_lens; ++i) {
    if (elements_[i].kind == ElementKind::kGap && elements_[i].acts_on(Axis::kAxial)) {
      z_last += elements_[i].value_mm;
    }
  }
  const double axial_image =
      last_lens_position_mm(Axis::kAxial) + solve_conjugate(*this, Axis::kAxial).image_distance_mm;
  joined.push_back({ElementKind::kGap, axial_image - z_last, AppliesTo::kBoth});
  joined.insert(joined.end(), next.elements().begin(), next.elements().end());
  return {name_ + " + " + next.name(), std::move(joined), source_label_, next.image_plane_label()};
}

Conjugate solve_conjugate(const OpticalPrescription& p, Axis axis) {
  const RayMatrix sys = p.system_matrix(axis);
  // b(d) of free_space(d) * sys is sys.b + d * sys.d: linear, so solve directly.
  if (sys.d == 0.0 || !std::isfinite(-sys.b / sys.d)) {
    throw SingularityError("prescription '" + p.name() + "': no finite image plane on the " +
                           beamlab::to_string(axis) + " axis");
  }
  Conjugate c;
  c.image_distance_mm = -sys.b / sys.d;
  c.object_to_image = beamlab::free_space(c.image_distance_mm) * sys;
  c.object_to_image.b = 0.0;
  c.magnification = std::abs(c.object_to_image.a);
  c.inverted = c.object_to_image.a < 0.0;
  return c;
}

double magnification(const OpticalPrescription& p, Axis axis) {
  return solve_conjugate(p, axis).magnification;
}

void BeamArraySpec::validate() const {
  if (channel_count < 1) throw DomainError("beam array: channel_count must be >= 1");
  if (!(pitch_um > 0.0)) throw DomainError("beam array: pitch must be positive");
  if (!(source_diameter_um > 0.0)) throw DomainError("beam array: diameter must be positive");
  if (!(wavelength_um > 0.0)) throw DomainError("beam array: wavelength must be positive");
}

ImagePlaneReport image_array(const OpticalPrescription& p, const BeamArraySpec& arr) {
  arr.validate();
  const auto source = beamlab::GaussianBeamState::round(arr.wavelength_um, arr.source_diameter_um / 2.0);

  ImagePlaneReport r;
  r.prescription_name = p.name();
  r.axial = image_axis(p, source, Axis::kAxial);
  r.radial = image_axis(p, source, Axis::kRadial);

  const double axial_a = solve_conjugate(p, Axis::kAxial).object_to_image.a;
  r.image_pitch_um = arr.pitch_um * std::abs(axial_a);
  r.centers_um.reserve(static_cast<std::size_t>(arr.channel_count));
  const double mid = 0.5 * (arr.channel_count - 1);
  for (int i = 0; i < arr.channel_count; ++i) {
    r.centers_um.push_back(axial_a * (i - mid) * arr.pitch_um);
  }

  const double axial_plane = p.last_lens_position_mm(Axis::kAxial) + r.axial.image_distance_mm;
  const double radial_plane = p.last_lens_position_mm(Axis::kRadial) + r.radial.image_distance_mm;
  r.astigmatic_offset_mm = radial_plane - axial_plane;

  const double waist_w = r.radial.waist_diameter_um / 2.0;
  const double zr_mm = std::numbers::pi * waist_w * waist_w / arr.wavelength_um * kMmPerUm;
  // Radial waist sits at radial_plane + waist_offset; evaluate at the axial plane.
  const double dz = axial_plane - (radial_plane + r.radial.waist_offset_mm);
  r.radial_diameter_at_axial_image_um = 2.0 * waist_w * std::sqrt(1.0 + (dz / zr_mm) * (dz / zr_mm));
  return r;
}

PitchDiscrepancy compare_measured_pitch(double predicted_pitch_um, double measured_pitch_um,
                                        double measured_err_um, double k) {
  if (!(measured_err_um > 0.0)) {
    throw DomainError("compare_measured_pitch: measured error must be positive");
  }
  if (!(predicted_pitch_um > 0.0)) {
    throw DomainError("compare_measured_pitch: predicted pitch must be positive");
  }
  PitchDiscrepancy d;
  d.predicted_um = predicted_pitch_um;
  d.measured_um = measured_pitch_um;
  d.measured_err_um = measured_err_um;
  d.absolute_um = measured_pitch_um - predicted_pitch_um;
  d.relative = d.absolute_um / predicted_pitch_um;
  d.sigmas = std::abs(d.absolute_um) / measured_err_um;
  d.k = k;
  d.within = std::abs(d.absolute_um) <= k * measured_err_um;
  return d;
}

PitchDiscrepancy compare_measured_pitch(const ImagePlaneReport& report, double measured_pitch_um,
                                        double measured_err_um, double k) {
  return compare_measured_pitch(report.image_pitch_um, measured_pitch_um, measured_err_um, k);
}

OpticalPrescription keplerian_relay(std::string name, double f1_mm, double f2_mm,
                                    AppliesTo applies_to) {
  return {std::move(name),
          {{ElementKind::kGap, f1_mm, AppliesTo::kBoth},
           {ElementKind::kLens, f1_mm, applies_to},
           {ElementKind::kGap, f1_mm + f2_mm, AppliesTo::kBoth},
           {ElementKind::kLens, f2_mm, applies_to},
           {ElementKind::kGap, f2_mm, AppliesTo::kBoth}}};
}

}  // namespace ionaddr::system_model
