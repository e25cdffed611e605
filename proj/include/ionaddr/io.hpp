#pragma once

#include <string>

#include <json.hpp>

#include "ionaddr/design.hpp"
#include "ionaddr/scan_fit.hpp"
#include "ionaddr/system_model.hpp"

namespace ionaddr::io {

using nlohmann::json;

/// Schema violations throw ParseError naming the JSON pointer of the field.
system_model::OpticalPrescription prescription_from_json(const json& j);
json to_json(const system_model::OpticalPrescription& p);
system_model::OpticalPrescription read_prescription_file(const std::string& path);

json to_json(const system_model::ImagePlaneReport& r);
json to_json(const system_model::PitchDiscrepancy& d);
json to_json(const design::DesignPoint& p);

/// Parameters in Hz and um; covariance in (Hz, um, um).
json to_json(const scan_fit::BeamFitResult& r);
scan_fit::BeamFitResult fit_result_from_json(const json& j);
json to_json(const scan_fit::PairReport& r);

/// `position_um,omega_hz,uncertainty_hz,baseline`
std::string freq_profile_csv(const scan_fit::FreqProfile& profile);
/// `diameter_um,required_na,crosstalk`
std::string tradeoff_csv(const design::TradeoffCurve& curve);

json read_json_file(const std::string& path);
/// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace ionaddr::io
