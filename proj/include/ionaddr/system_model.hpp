#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ionaddr/beamlab.hpp"

namespace ionaddr::system_model {

using beamlab::Axis;
using beamlab::RayMatrix;

enum class ElementKind { kLens, kGap };
enum class AppliesTo { kAxial, kRadial, kBoth };

struct Element {
  ElementKind kind = ElementKind::kGap;
  /// Focal length for lenses, length for gaps.
  double value_mm = 0.0;
  AppliesTo applies_to = AppliesTo::kBoth;

  bool acts_on(Axis axis) const;
};

/// Ordered element list from the object (source) plane. The image distance
/// after the last lens of each axis is always solved, never read from the list.
class OpticalPrescription {
 public:
  OpticalPrescription(std::string name, std::vector<Element> elements,
                      std::string source_plane_label = "source",
                      std::string image_plane_label = "image");

  const std::string& name() const { return name_; }
  const std::vector<Element>& elements() const { return elements_; }
  const std::string& source_plane_label() const { return source_label_; }
  const std::string& image_plane_label() const { return image_label_; }

  /// Matrices acting on `axis` from the source plane through its last lens.
  std::vector<RayMatrix> axis_matrices(Axis axis) const;
  /// Composition of axis_matrices(axis).
  RayMatrix system_matrix(Axis axis) const;
  /// Path length from the source plane to the last lens on `axis`.
  double last_lens_position_mm(Axis axis) const;

  /// Appends `next` with its source plane placed on this prescription's
  /// axial image plane.
  OpticalPrescription then(const OpticalPrescription& next) const;

 private:
  std::string name_;
  std::vector<Element> elements_;
  std::string source_label_;
  std::string image_label_;
};

/// Object-to-image mapping of one axis.
struct Conjugate {
  /// Distance from the last lens to the image plane (negative: virtual image).
  double image_distance_mm = 0.0;
  /// Object-to-image matrix (b == 0).
  RayMatrix object_to_image;
  /// |a|: image size / object size.
  double magnification = 0.0;
  bool inverted = false;
};

/// Throws SingularityError when no finite image plane exists.
Conjugate solve_conjugate(const OpticalPrescription& p, Axis axis);
double magnification(const OpticalPrescription& p, Axis axis);

struct BeamArraySpec {
  int channel_count = 32;
  double pitch_um = 450.0;
  double source_diameter_um = 200.0;
  double wavelength_um = 0.355;

  void validate() const;
};

struct AxisImage {
  Axis axis = Axis::kAxial;
  double magnification = 0.0;
  bool inverted = false;
  double image_distance_mm = 0.0;
  /// 2 w at this axis' own image plane, from Gaussian propagation.
  double image_diameter_um = 0.0;
  /// Waist of the propagated beam, relative to this axis' image plane.
  double waist_diameter_um = 0.0;
  double waist_offset_mm = 0.0;
};

struct ImagePlaneReport {
  std::string prescription_name;
  AxisImage axial;
  AxisImage radial;
  double image_pitch_um = 0.0;
  std::vector<double> centers_um;
  /// Radial image plane minus axial image plane, along the optical axis.
  double astigmatic_offset_mm = 0.0;
  /// Radial 2 w evaluated on the axial image plane.
  double radial_diameter_at_axial_image_um = 0.0;
};

/// Source-plane channel centers are (i - (N-1)/2) * pitch; the Gaussian source
/// waist sits on the source plane.
ImagePlaneReport image_array(const OpticalPrescription& p, const BeamArraySpec& arr);

struct PitchDiscrepancy {
  double predicted_um = 0.0;
  double measured_um = 0.0;
  double measured_err_um = 0.0;
  double absolute_um = 0.0;  // measured - predicted
  double relative = 0.0;     // absolute / predicted
  double sigmas = 0.0;       // |absolute| / measured_err
  double k = 3.0;
  bool within = false;       // |absolute| <= k * measured_err
};

PitchDiscrepancy compare_measured_pitch(double predicted_pitch_um, double measured_pitch_um,
                                        double measured_err_um, double k = 3.0);
PitchDiscrepancy compare_measured_pitch(const ImagePlaneReport& report, double measured_pitch_um,
                                        double measured_err_um, double k = 3.0);

/// Source -> f1 -> f1+f2 -> f2 -> image, acting on `applies_to`.
OpticalPrescription keplerian_relay(std::string name, double f1_mm, double f2_mm,
                                    AppliesTo applies_to = AppliesTo::kBoth);

}  // namespace ionaddr::system_model
