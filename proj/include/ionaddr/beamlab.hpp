#pragma once

#include <complex>
#include <span>
#include <vector>

namespace ionaddr::beamlab {

enum class Axis { kAxial, kRadial };

const char* to_string(Axis axis);

/// Paraxial ray-transfer matrix. b is in mm, c in 1/mm.
struct RayMatrix {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double d = 1.0;

  double det() const { return a * d - b * c; }
  RayMatrix inverse() const;

  static RayMatrix identity() { return {}; }
};

/// m2 * m1: m1 acts first.
RayMatrix operator*(const RayMatrix& m2, const RayMatrix& m1);

RayMatrix free_space(double distance_mm);
/// Throws DomainError for f == 0. An infinite focal length is a flat optic.
RayMatrix thin_lens(double focal_length_mm);
/// Product in propagation order; elements.front() acts first.
RayMatrix compose(std::span<const RayMatrix> elements);

/// Waist of one transverse axis. waist_position_mm is measured from the
/// current reference plane along the propagation direction; a positive value
/// means the waist lies ahead.
struct AxisWaist {
  double waist_radius_um = 0.0;
  double waist_position_mm = 0.0;
};

/// Astigmatic Gaussian beam, 1/e^2 intensity radius convention.
class GaussianBeamState {
 public:
  GaussianBeamState(double wavelength_um, AxisWaist axial, AxisWaist radial);
  /// Stigmatic beam with its waist at the reference plane.
  static GaussianBeamState round(double wavelength_um, double waist_radius_um);

  double wavelength_um() const { return wavelength_um_; }
  const AxisWaist& axis(Axis which) const { return which == Axis::kAxial ? axial_ : radial_; }
  const AxisWaist& axial() const { return axial_; }
  const AxisWaist& radial() const { return radial_; }

  double rayleigh_range_mm(Axis which) const;
  /// q = (z - z_waist) + i z_R at the reference plane (z = 0), in mm.
  std::complex<double> q(Axis which) const;
  /// Far-field half-angle divergence lambda / (pi w0), radians.
  double divergence(Axis which) const;

  GaussianBeamState with_axis(Axis which, AxisWaist waist) const;

 private:
  double wavelength_um_;
  AxisWaist axial_;
  AxisWaist radial_;
};

/// Applies q' = (a q + b) / (c q + d) on one axis; the other axis is untouched.
/// Throws SingularityError when c q + d vanishes.
GaussianBeamState propagate(const GaussianBeamState& beam, const RayMatrix& m, Axis axis);

/// Beam radius w(z) at distance z_mm from the reference plane.
double spot_radius_at(const GaussianBeamState& beam, double z_mm, Axis axis);

}  // namespace ionaddr::beamlab
