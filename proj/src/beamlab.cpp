#include "ionaddr/beamlab.hpp"

#include <cmath>
#include <numbers>

#include "ionaddr/errors.hpp"

namespace ionaddr::beamlab {
namespace {

constexpr double kUmPerMm = 1000.0;
constexpr double kUnitDetTolerance = 1e-9;

}  // namespace

const char* to_string(Axis axis) { return axis == Axis::kAxial ? "axial" : "radial"; }

RayMatrix RayMatrix::inverse() const {
  const double det = this->det();
  return {d / det, -b / det, -c / det, a / det};
}

RayMatrix operator*(const RayMatrix& m2, const RayMatrix& m1) {
  return {m2.a * m1.a + m2.b * m1.c, m2.a * m1.b + m2.b * m1.d,
          m2.c * m1.a + m2.d * m1.c, m2.c * m1.b + m2.d * m1.d};
}

RayMatrix free_space(double distance_mm) { return {1.0, distance_mm, 0.0, 1.0}; }

RayMatrix thin_lens(double focal_length_mm) {
  if (focal_length_mm == 0.0 || std::isnan(focal_length_mm)) {
    throw DomainError("thin_lens: focal length must be nonzero");
  }
  return {1.0, 0.0, -1.0 / focal_length_mm, 1.0};
}

RayMatrix compose(std::span<const RayMatrix> elements) {
  if (elements.empty()) {
    throw DomainError("compose: empty element list");
  }
  RayMatrix total = elements.front();
  for (const auto& m : elements.subspan(1)) {
    total = m * total;
  }
  return total;
}

GaussianBeamState::GaussianBeamState(double wavelength_um, AxisWaist axial, AxisWaist radial)
    : wavelength_um_(wavelength_um), axial_(axial), radial_(radial) {
  if (!(wavelength_um > 0.0) || !std::isfinite(wavelength_um)) {
    throw DomainError("GaussianBeamState: wavelength must be positive");
  }
  for (const auto* w : {&axial_, &radial_}) {
    if (!(w->waist_radius_um > 0.0) || !std::isfinite(w->waist_radius_um)) {
      throw DomainError("GaussianBeamState: waist radius must be positive");
    }
    if (!std::isfinite(w->waist_position_mm)) {
      throw DomainError("GaussianBeamState: waist position must be finite");
    }
  }
}

GaussianBeamState GaussianBeamState::round(double wavelength_um, double waist_radius_um) {
  return {wavelength_um, {waist_radius_um, 0.0}, {waist_radius_um, 0.0}};
}

double GaussianBeamState::rayleigh_range_mm(Axis which) const {
  const double w0 = axis(which).waist_radius_um;
  return std::numbers::pi * w0 * w0 / wavelength_um_ / kUmPerMm;
}

std::complex<double> GaussianBeamState::q(Axis which) const {
  return {-axis(which).waist_position_mm, rayleigh_range_mm(which)};
}

double GaussianBeamState::divergence(Axis which) const {
  return wavelength_um_ / (std::numbers::pi * axis(which).waist_radius_um);
}

GaussianBeamState GaussianBeamState::with_axis(Axis which, AxisWaist waist) const {
  return which == Axis::kAxial ? GaussianBeamState(wavelength_um_, waist, radial_)
                               : GaussianBeamState(wavelength_um_, axial_, waist);
}

GaussianBeamState propagate(const GaussianBeamState& beam, const RayMatrix& m, Axis axis) {
  if (std::abs(m.det() - 1.0) > kUnitDetTolerance) {
    throw DomainError("propagate: ray matrix must have unit determinant");
  }
  const std::complex<double> q = beam.q(axis);
  const std::complex<double> denom = m.c * q + m.d;
  if (std::abs(denom) == 0.0) {
    throw SingularityError("propagate: c*q + d = 0 (image at infinity)");
  }
  const std::complex<double> q_out = (m.a * q + m.b) / denom;
  if (!(q_out.imag() > 0.0) || !std::isfinite(q_out.imag())) {
    throw SingularityError("propagate: transformed beam parameter is not physical");
  }
  const double zr_um = q_out.imag() * kUmPerMm;
  const double w0 = std::sqrt(beam.wavelength_um() * zr_um / std::numbers::pi);
  return beam.with_axis(axis, {w0, -q_out.real()});
}

double spot_radius_at(const GaussianBeamState& beam, double z_mm, Axis axis) {
  const auto& waist = beam.axis(axis);
  const double x = (z_mm - waist.waist_position_mm) / beam.rayleigh_range_mm(axis);
  return waist.waist_radius_um * std::sqrt(1.0 + x * x);
}

}  // namespace ionaddr::beamlab
