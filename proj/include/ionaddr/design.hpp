#pragma once

#include <optional>
#include <vector>

namespace ionaddr::design {

/// One sample of the crosstalk / required-NA tradeoff.
struct DesignPoint {
  double beam_diameter_um = 0.0;
  double required_na = 0.0;
  double crosstalk = 0.0;
};

struct DesignConstraints {
  double wavelength_um = 0.355;
  double neighbor_distance_um = 5.0;
  double na_cap = 0.24;

  void validate() const;
};

/// Peak-normalized intensity at the neighbor, exp(-2 d^2 / w0^2), w0 = D/2.
double crosstalk(double beam_diameter_um, double neighbor_distance_um);

/// 2 sin(lambda / (pi w0)). Throws DomainError once the argument reaches pi/2.
double required_na(double beam_diameter_um, double wavelength_um);

/// Inverse of required_na: 2 lambda / (pi asin(na_cap / 2)).
double min_diameter_for_na(double na_cap, double wavelength_um);

struct TradeoffCurve {
  /// Increasing in diameter; includes the boundary point when it lies in range.
  std::vector<DesignPoint> points;
  /// Smallest diameter the NA cap allows.
  DesignPoint boundary;
  bool boundary_in_range = false;
};

/// Linear sampling of [d_min, d_max] with `samples` points, plus the boundary.
TradeoffCurve tradeoff_curve(const DesignConstraints& constraints, double diameter_min_um,
                             double diameter_max_um, int samples);

/// Power fraction beyond a knife edge at distance h from the beam center,
/// 0.5 erfc(sqrt(2) h / w).
double clipping_fraction(double beam_radius_at_surface_um, double clearance_um);

}  // namespace ionaddr::design
