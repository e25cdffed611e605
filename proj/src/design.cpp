#include "ionaddr/design.hpp"

#include <cmath>
#include <numbers>

#include "ionaddr/errors.hpp"

namespace ionaddr::design {

void DesignConstraints::validate() const {
  if (!(wavelength_um > 0.0)) throw DomainError("wavelength must be positive");
  if (!(neighbor_distance_um > 0.0)) throw DomainError("neighbor distance must be positive");
  if (!(na_cap > 0.0 && na_cap < 1.0)) throw DomainError("NA cap must lie in (0, 1)");
}

double crosstalk(double beam_diameter_um, double neighbor_distance_um) {
  if (!(beam_diameter_um > 0.0)) throw DomainError("crosstalk: diameter must be positive");
  if (neighbor_distance_um < 0.0) throw DomainError("crosstalk: distance must be non-negative");
  const double w0 = beam_diameter_um / 2.0;
  const double r = neighbor_distance_um / w0;
  return std::exp(-2.0 * r * r);
}

double required_na(double beam_diameter_um, double wavelength_um) {
  if (!(beam_diameter_um > 0.0) || !(wavelength_um > 0.0)) {
    throw DomainError("required_na: diameter and wavelength must be positive");
  }
  const double divergence = wavelength_um / (std::numbers::pi * beam_diameter_um / 2.0);
  if (divergence >= std::numbers::pi / 2.0) {
    throw DomainError("required_na: beam too small for paraxial validity");
  }
  return 2.0 * std::sin(divergence);
}

double min_diameter_for_na(double na_cap, double wavelength_um) {
  if (!(na_cap > 0.0 && na_cap < 1.0)) throw DomainError("min_diameter_for_na: NA must lie in (0, 1)");
  if (!(wavelength_um > 0.0)) throw DomainError("min_diameter_for_na: wavelength must be positive");
  return 2.0 * wavelength_um / (std::numbers::pi * std::asin(na_cap / 2.0));
}

TradeoffCurve tradeoff_curve(const DesignConstraints& constraints, double diameter_min_um,
                             double diameter_max_um, int samples) {
  constraints.validate();
  if (samples < 2) throw DomainError("tradeoff_curve: need at least 2 samples");
  if (!(diameter_min_um > 0.0 && diameter_max_um > diameter_min_um)) {
    throw DomainError("tradeoff_curve: diameter range must be positive and increasing");
  }

  auto point_at = [&](double diameter) {
    DesignPoint p{diameter, required_na(diameter, constraints.wavelength_um),
                  crosstalk(diameter, constraints.neighbor_distance_um)};
    if (p.required_na >= 1.0) {
      throw DomainError("tradeoff_curve: diameter " + std::to_string(diameter) +
                        " um needs NA >= 1");
    }
    return p;
  };

  TradeoffCurve curve;
  const double boundary_d = min_diameter_for_na(constraints.na_cap, constraints.wavelength_um);
  curve.boundary = {boundary_d, constraints.na_cap, crosstalk(boundary_d, constraints.neighbor_distance_um)};
  curve.boundary_in_range = boundary_d >= diameter_min_um && boundary_d <= diameter_max_um;

  const double step = (diameter_max_um - diameter_min_um) / (samples - 1);
  curve.points.reserve(static_cast<std::size_t>(samples) + 1);
  bool boundary_placed = !curve.boundary_in_range;
  for (int i = 0; i < samples; ++i) {
    const double d = i == samples - 1 ? diameter_max_um : diameter_min_um + i * step;
    if (!boundary_placed && boundary_d <= d) {
      if (boundary_d < d) curve.points.push_back(curve.boundary);
      boundary_placed = true;
    }
    curve.points.push_back(point_at(d));
  }
  return curve;
}

double clipping_fraction(double beam_radius_at_surface_um, double clearance_um) {
  if (!(beam_radius_at_surface_um > 0.0)) {
    throw DomainError("clipping_fraction: beam radius must be positive");
  }
  return 0.5 * std::erfc(std::numbers::sqrt2 * clearance_um / beam_radius_at_surface_um);
}

}  // namespace ionaddr::design
