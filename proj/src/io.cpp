#include "ionaddr/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ionaddr/errors.hpp"
#include "ionaddr/scan_data.hpp"

namespace ionaddr::io {
namespace {

using namespace system_model;

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "/" + key + ": missing required field");
  return *it;
}

double require_number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number()) throw ParseError(path + "/" + key + ": expected a number");
  return v.get<double>();
}

std::string optional_string(const json& obj, const std::string& key, const std::string& path,
                            const std::string& fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_string()) throw ParseError(path + "/" + key + ": expected a string");
  return it->get<std::string>();
}

const char* applies_name(AppliesTo a) {
  switch (a) {
    case AppliesTo::kAxial:
      return "axial";
    case AppliesTo::kRadial:
      return "radial";
    case AppliesTo::kBoth:
      break;
  }
  return "both";
}

json axis_json(const AxisImage& a) {
  return {{"magnification", a.magnification},
          {"demagnification", a.magnification > 0.0 ? 1.0 / a.magnification : 0.0},
          {"inverted", a.inverted},
          {"image_distance_mm", a.image_distance_mm},
          {"image_diameter_um", a.image_diameter_um},
          {"waist_diameter_um", a.waist_diameter_um},
          {"waist_offset_mm", a.waist_offset_mm}};
}

double hz(double omega) { return rabi::angular_to_hz(omega); }

std::string line_csv(std::initializer_list<std::string> fields) {
  std::string out;
  for (const auto& f : fields) {
    if (!out.empty()) out += ',';
    out += f;
  }
  return out + '\n';
}

}  // namespace

OpticalPrescription prescription_from_json(const json& j) {
  if (!j.is_object()) throw ParseError(": prescription must be a JSON object");
  const json& name = require(j, "name", "");
  if (!name.is_string()) throw ParseError("/name: expected a string");
  const json& elems = require(j, "elements", "");
  if (!elems.is_array() || elems.empty()) throw ParseError("/elements: expected a non-empty array");

  std::vector<Element> elements;
  for (std::size_t i = 0; i < elems.size(); ++i) {
    const std::string path = "/elements/" + std::to_string(i);
    const json& kind = require(elems[i], "kind", path);
    Element e;
    if (kind == "lens") {
      e.kind = ElementKind::kLens;
    } else if (kind == "gap") {
      e.kind = ElementKind::kGap;
    } else {
      throw ParseError(path + "/kind: expected \"lens\" or \"gap\"");
    }
    e.value_mm = require_number(elems[i], "value_mm", path);
    const std::string axis = optional_string(elems[i], "axis", path, "both");
    if (axis == "axial") {
      e.applies_to = AppliesTo::kAxial;
    } else if (axis == "radial") {
      e.applies_to = AppliesTo::kRadial;
    } else if (axis == "both") {
      e.applies_to = AppliesTo::kBoth;
    } else {
      throw ParseError(path + "/axis: expected \"axial\", \"radial\" or \"both\"");
    }
    if (e.kind == ElementKind::kLens && e.value_mm == 0.0) {
      throw ParseError(path + "/value_mm: lens focal length must be nonzero");
    }
    elements.push_back(e);
  }
  try {
    return {name.get<std::string>(), std::move(elements), optional_string(j, "source_plane", "", "source"),
            optional_string(j, "image_plane", "", "image")};
  } catch (const DomainError& e) {
    throw ParseError(std::string("/elements: ") + e.what());
  }
}

json to_json(const OpticalPrescription& p) {
  json elems = json::array();
  for (const auto& e : p.elements()) {
    elems.push_back({{"kind", e.kind == ElementKind::kLens ? "lens" : "gap"},
                     {"value_mm", e.value_mm},
                     {"axis", applies_name(e.applies_to)}});
  }
  return {{"name", p.name()},
          {"source_plane", p.source_plane_label()},
          {"image_plane", p.image_plane_label()},
          {"elements", elems}};
}

OpticalPrescription read_prescription_file(const std::string& path) {
  return prescription_from_json(read_json_file(path));
}

json to_json(const ImagePlaneReport& r) {
  return {{"prescription", r.prescription_name},
          {"axial", axis_json(r.axial)},
          {"radial", axis_json(r.radial)},
          {"image_pitch_um", r.image_pitch_um},
          {"centers_um", r.centers_um},
          {"astigmatic_offset_mm", r.astigmatic_offset_mm},
          {"radial_diameter_at_axial_image_um", r.radial_diameter_at_axial_image_um}};
}

json to_json(const PitchDiscrepancy& d) {
  return {{"predicted_um", d.predicted_um}, {"measured_um", d.measured_um},
          {"measured_err_um", d.measured_err_um}, {"absolute_um", d.absolute_um},
          {"relative", d.relative}, {"sigmas", d.sigmas}, {"k", d.k}, {"within", d.within}};
}

json to_json(const design::DesignPoint& p) {
  return {{"diameter_um", p.beam_diameter_um}, {"required_na", p.required_na}, {"crosstalk", p.crosstalk}};
}

json to_json(const scan_fit::BeamFitResult& r) {
  const double k = 1.0 / rabi::kTwoPi;
  const std::array<double, 3> unit = {k, 1.0, 1.0};
  json cov = json::array();
  for (std::size_t i = 0; i < 3; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < 3; ++j) row.push_back(r.covariance[i][j] * unit[i] * unit[j]);
    cov.push_back(row);
  }
  json widths = {{"w0_um", r.widths.w0_um}, {"two_w0_um", r.widths.two_w0_um}, {"valid", r.widths.valid}};
  if (r.widths.valid) {
    widths["d4sigma_um"] = r.widths.d4sigma_um;
    widths["d4sigma_raw_um"] = r.widths.d4sigma_raw_um;
    widths["baseline_omega_hz"] = hz(r.widths.baseline_omega);
  }
  return {{"label", r.label},
          {"converged", r.converged},
          {"params",
           {{"omega0_hz", hz(r.params.omega0)}, {"x_c_um", r.params.x_c}, {"w0_um", r.params.w0}}},
          {"sigma", {{"omega0_hz", hz(r.sigma(0))}, {"x_c_um", r.sigma(1)}, {"w0_um", r.sigma(2)}}},
          {"covariance", cov},
          {"residual_rms", r.residual_rms},
          {"shot_noise_rms", r.shot_noise_rms},
          {"chi2", r.chi2},
          {"dof", r.dof},
          {"iterations", r.iterations},
          {"starts", r.starts},
          {"widths", widths},
          {"warnings", r.warnings}};
}

scan_fit::BeamFitResult fit_result_from_json(const json& j) {
  scan_fit::BeamFitResult r;
  const json& params = require(j, "params", "");
  r.params.omega0 = rabi::hz_to_angular(require_number(params, "omega0_hz", "/params"));
  r.params.x_c = require_number(params, "x_c_um", "/params");
  r.params.w0 = require_number(params, "w0_um", "/params");
  const json& conv = require(j, "converged", "");
  if (!conv.is_boolean()) throw ParseError("/converged: expected a boolean");
  r.converged = conv.get<bool>();
  r.label = optional_string(j, "label", "", "");
  const json& cov = require(j, "covariance", "");
  if (!cov.is_array() || cov.size() != 3) throw ParseError("/covariance: expected a 3x3 array");
  const std::array<double, 3> unit = {rabi::kTwoPi, 1.0, 1.0};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!cov[i].is_array() || cov[i].size() != 3) throw ParseError("/covariance/" + std::to_string(i) + ": expected 3 numbers");
    for (std::size_t k = 0; k < 3; ++k) {
      if (!cov[i][k].is_number()) {
        throw ParseError("/covariance/" + std::to_string(i) + "/" + std::to_string(k) + ": expected a number");
      }
      r.covariance[i][k] = cov[i][k].get<double>() * unit[i] * unit[k];
    }
  }
  try {
    r.params.validate();
  } catch (const DomainError& e) {
    throw ParseError(std::string("/params: ") + e.what());
  }
  return r;
}

json to_json(const scan_fit::PairReport& r) {
  auto check = [](const scan_fit::NeighborCheck& c) {
    return json{{"observed_omega_hz", hz(c.observed_omega)},
                {"observed_uncertainty_hz", hz(c.observed_uncertainty)},
                {"resolved", c.resolved},
                {"omega_bound_hz", hz(c.omega_bound)},
                {"crosstalk_bound", c.crosstalk_bound}};
  };
  return {{"separation_um", r.separation_um},
          {"separation_uncertainty_um", r.separation_uncertainty_um},
          {"beam_a", check(r.a)},
          {"beam_b", check(r.b)},
          {"warnings", r.warnings}};
}

std::string freq_profile_csv(const scan_fit::FreqProfile& profile) {
  std::string out = "position_um,omega_hz,uncertainty_hz,baseline\n";
  for (const auto& p : profile.points) {
    out += line_csv({format_number(p.position_um), format_number(hz(p.omega)),
                     format_number(hz(p.uncertainty)), p.baseline ? "1" : "0"});
  }
  return out;
}

std::string tradeoff_csv(const design::TradeoffCurve& curve) {
  std::string out = "diameter_um,required_na,crosstalk\n";
  for (const auto& p : curve.points) {
    out += line_csv({format_number(p.beam_diameter_um), format_number(p.required_na), format_number(p.crosstalk)});
  }
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot write " + tmp);
    out << contents;
    out.flush();
    if (!out) throw std::ios_base::failure("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::ios_base::failure("cannot rename " + tmp + " to " + path);
  }
}

}  // namespace ionaddr::io
