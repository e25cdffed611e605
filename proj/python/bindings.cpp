#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ionaddr/beamlab.hpp"
#include "ionaddr/design.hpp"
#include "ionaddr/errors.hpp"
#include "ionaddr/io.hpp"
#include "ionaddr/rabi.hpp"
#include "ionaddr/scan_data.hpp"
#include "ionaddr/scan_fit.hpp"
#include "ionaddr/synth.hpp"
#include "ionaddr/system_model.hpp"

namespace py = pybind11;
using namespace ionaddr;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_ionaddr, m) {
  m.doc() = "Individual-addressing beam design and Rabi-scan fitting";
  m.attr("__version__") = IONADDR_VERSION;

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<SingularityError>(m, "SingularityError", PyExc_ArithmeticError);
  py::register_exception<scan_fit::RankDeficiencyError>(m, "RankDeficiencyError", PyExc_ValueError);
  static py::exception<scan_fit::ConvergenceError> convergence(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const scan_fit::ConvergenceError& e) {
      py::object err = py::handle(convergence.ptr())(e.what());
      err.attr("best") = to_py(io::to_json(e.best()));
      py::set_error(convergence, err);
    }
  });

  // beamlab
  py::enum_<beamlab::Axis>(m, "Axis").value("AXIAL", beamlab::Axis::kAxial).value("RADIAL", beamlab::Axis::kRadial);

  py::class_<beamlab::RayMatrix>(m, "RayMatrix")
      .def(py::init([](double a, double b, double c, double d) { return beamlab::RayMatrix{a, b, c, d}; }),
           py::arg("a") = 1.0, py::arg("b") = 0.0, py::arg("c") = 0.0, py::arg("d") = 1.0)
      .def_readwrite("a", &beamlab::RayMatrix::a)
      .def_readwrite("b", &beamlab::RayMatrix::b)
      .def_readwrite("c", &beamlab::RayMatrix::c)
      .def_readwrite("d", &beamlab::RayMatrix::d)
      .def("det", &beamlab::RayMatrix::det)
      .def("inverse", &beamlab::RayMatrix::inverse)
      .def("__matmul__", [](const beamlab::RayMatrix& l, const beamlab::RayMatrix& r) { return l * r; })
      .def("__repr__", [](const beamlab::RayMatrix& r) {
        std::ostringstream s;
        s << "RayMatrix(" << r.a << ", " << r.b << ", " << r.c << ", " << r.d << ")";
        return s.str();
      });
  m.def("free_space", &beamlab::free_space, py::arg("distance_mm"));
  m.def("thin_lens", &beamlab::thin_lens, py::arg("focal_length_mm"));

  py::class_<beamlab::AxisWaist>(m, "AxisWaist")
      .def(py::init([](double w, double z) { return beamlab::AxisWaist{w, z}; }), py::arg("waist_radius_um"),
           py::arg("waist_position_mm") = 0.0)
      .def_readonly("waist_radius_um", &beamlab::AxisWaist::waist_radius_um)
      .def_readonly("waist_position_mm", &beamlab::AxisWaist::waist_position_mm);

  py::class_<beamlab::GaussianBeamState>(m, "GaussianBeamState")
      .def(py::init<double, beamlab::AxisWaist, beamlab::AxisWaist>(), py::arg("wavelength_um"), py::arg("axial"),
           py::arg("radial"))
      .def_static("round", &beamlab::GaussianBeamState::round, py::arg("wavelength_um"), py::arg("waist_radius_um"))
      .def_property_readonly("wavelength_um", &beamlab::GaussianBeamState::wavelength_um)
      .def_property_readonly("axial", &beamlab::GaussianBeamState::axial)
      .def_property_readonly("radial", &beamlab::GaussianBeamState::radial)
      .def("rayleigh_range_mm", &beamlab::GaussianBeamState::rayleigh_range_mm)
      .def("q", &beamlab::GaussianBeamState::q)
      .def("divergence", &beamlab::GaussianBeamState::divergence);
  m.def("propagate", &beamlab::propagate, py::arg("beam"), py::arg("matrix"), py::arg("axis"));
  m.def("spot_radius_at", &beamlab::spot_radius_at, py::arg("beam"), py::arg("z_mm"), py::arg("axis"));

  // system_model
  py::class_<system_model::OpticalPrescription>(m, "OpticalPrescription")
      .def_static(
          "from_dict", [](const py::object& o) { return io::prescription_from_json(from_py(o)); }, py::arg("data"))
      .def_static("from_file", &io::read_prescription_file, py::arg("path"))
      .def_property_readonly("name", &system_model::OpticalPrescription::name)
      .def("system_matrix", &system_model::OpticalPrescription::system_matrix, py::arg("axis"))
      .def("then", &system_model::OpticalPrescription::then, py::arg("next"))
      .def("to_dict", [](const system_model::OpticalPrescription& p) { return to_py(io::to_json(p)); });
  m.def("magnification", &system_model::magnification, py::arg("prescription"), py::arg("axis"));
  m.def("keplerian_relay", [](std::string name, double f1, double f2) {
    return system_model::keplerian_relay(std::move(name), f1, f2);
  }, py::arg("name"), py::arg("f1_mm"), py::arg("f2_mm"));
  m.def(
      "image_array",
      [](const system_model::OpticalPrescription& p, int count, double pitch, double diameter, double wavelength) {
        return to_py(io::to_json(system_model::image_array(p, {count, pitch, diameter, wavelength})));
      },
      py::arg("prescription"), py::arg("channel_count") = 32, py::arg("pitch_um") = 450.0,
      py::arg("source_diameter_um") = 200.0, py::arg("wavelength_um") = 0.355);
  m.def(
      "compare_measured_pitch",
      [](double predicted, double measured, double err, double k) {
        return to_py(io::to_json(system_model::compare_measured_pitch(predicted, measured, err, k)));
      },
      py::arg("predicted_um"), py::arg("measured_um"), py::arg("measured_err_um"), py::arg("k") = 3.0);

  // design
  m.def("crosstalk", &design::crosstalk, py::arg("beam_diameter_um"), py::arg("neighbor_distance_um"));
  m.def("required_na", &design::required_na, py::arg("beam_diameter_um"), py::arg("wavelength_um") = 0.355);
  m.def("min_diameter_for_na", &design::min_diameter_for_na, py::arg("na_cap"), py::arg("wavelength_um") = 0.355);
  m.def("clipping_fraction", &design::clipping_fraction, py::arg("beam_radius_at_surface_um"),
        py::arg("clearance_um"));
  m.def(
      "tradeoff_curve",
      [](double na_cap, double wavelength, double neighbor, double dmin, double dmax, int samples) {
        const auto curve = design::tradeoff_curve({wavelength, neighbor, na_cap}, dmin, dmax, samples);
        py::list points;
        for (const auto& p : curve.points) points.append(to_py(io::to_json(p)));
        py::dict out;
        out["points"] = points;
        out["boundary"] = to_py(io::to_json(curve.boundary));
        out["boundary_in_range"] = curve.boundary_in_range;
        return out;
      },
      py::arg("na_cap") = 0.24, py::arg("wavelength_um") = 0.355, py::arg("neighbor_distance_um") = 5.0,
      py::arg("diameter_min_um") = 1.0, py::arg("diameter_max_um") = 10.0, py::arg("samples") = 200);

  // rabi
  py::class_<rabi::BeamProfileParams>(m, "BeamProfileParams")
      .def(py::init([](double omega0, double x_c, double w0) {
             rabi::BeamProfileParams p{omega0, x_c, w0};
             p.validate();
             return p;
           }),
           py::arg("omega0"), py::arg("x_c"), py::arg("w0"))
      .def_readonly("omega0", &rabi::BeamProfileParams::omega0)
      .def_readonly("x_c", &rabi::BeamProfileParams::x_c)
      .def_readonly("w0", &rabi::BeamProfileParams::w0);
  py::class_<rabi::SpamModel>(m, "SpamModel")
      .def(py::init([](double prep, double meas) {
             rabi::SpamModel s{prep, meas};
             s.validate();
             return s;
           }),
           py::arg("eps_prep") = 0.01, py::arg("eps_meas") = 0.01)
      .def_readonly("eps_prep", &rabi::SpamModel::eps_prep)
      .def_readonly("eps_meas", &rabi::SpamModel::eps_meas);
  m.def("local_rabi_frequency", &rabi::local_rabi_frequency, py::arg("params"), py::arg("x_um"));
  m.def("p_excited", &rabi::p_excited, py::arg("params"), py::arg("x_um"), py::arg("t_s"));
  m.def("p_excited_gradient", &rabi::p_excited_gradient, py::arg("params"), py::arg("x_um"), py::arg("t_s"));
  m.def("apply_spam", &rabi::apply_spam, py::arg("p_ideal"), py::arg("spam"));
  m.def("crosstalk_rabi_bound", &rabi::crosstalk_rabi_bound, py::arg("window_s"), py::arg("floor"));
  m.def("hz_to_angular", &rabi::hz_to_angular, py::arg("hz"));
  m.def("angular_to_hz", &rabi::angular_to_hz, py::arg("omega"));
  m.def("intensity_crosstalk_ratio", &rabi::intensity_crosstalk_ratio, py::arg("omega_bound"),
        py::arg("omega_peak"));

  // scan data
  py::class_<ScanRecord>(m, "ScanRecord")
      .def(py::init([](double x, double t, double p1, long shots) { return ScanRecord{x, t, p1, shots}; }),
           py::arg("position_um"), py::arg("duration_s"), py::arg("p1"), py::arg("shots"))
      .def_readonly("position_um", &ScanRecord::position_um)
      .def_readonly("duration_s", &ScanRecord::duration_s)
      .def_readonly("p1", &ScanRecord::p1)
      .def_readonly("shots", &ScanRecord::shots);
  py::class_<ScanDataset>(m, "ScanDataset")
      .def(py::init([](std::string label, std::vector<ScanRecord> records) {
             ScanDataset d;
             d.label = std::move(label);
             d.records = std::move(records);
             d.validate_records();
             return d;
           }),
           py::arg("label"), py::arg("records"))
      .def_static(
          "from_csv",
          [](const std::string& text, std::string label) {
            std::istringstream in(text);
            return read_scan_csv(in, std::move(label));
          },
          py::arg("text"), py::arg("label") = "")
      .def_static("read", &read_scan_csv_file, py::arg("path"))
      .def_readonly("label", &ScanDataset::label)
      .def_readonly("records", &ScanDataset::records)
      .def("positions", &ScanDataset::positions)
      .def("durations", &ScanDataset::durations)
      .def("to_csv", &scan_csv_string)
      .def("__len__", [](const ScanDataset& d) { return d.records.size(); });

  // synth
  m.def("linspace", &synth::linspace, py::arg("lo"), py::arg("hi"), py::arg("count"));
  m.def(
      "generate",
      [](const std::vector<std::pair<std::string, rabi::BeamProfileParams>>& beams, std::vector<double> positions_um,
         std::vector<double> durations_s, long shots, std::uint64_t seed, const rabi::SpamModel& spam,
         bool analytic) {
        synth::SynthConfig cfg;
        for (const auto& [label, params] : beams) cfg.beams.push_back({label, params});
        cfg.positions_um = std::move(positions_um);
        cfg.durations_s = std::move(durations_s);
        cfg.shots = shots;
        cfg.seed = seed;
        cfg.spam = spam;
        cfg.analytic = analytic;
        return synth::generate(cfg);
      },
      py::arg("beams"), py::arg("positions_um"), py::arg("durations_s"), py::arg("shots") = 200,
      py::arg("seed") = 0, py::arg("spam") = rabi::SpamModel{}, py::arg("analytic") = false);
  m.def("position_jitter", &synth::position_jitter, py::arg("data"), py::arg("resolution_um"), py::arg("seed"));

  // scan_fit
  py::class_<scan_fit::BeamFitResult>(m, "BeamFitResult")
      .def_readonly("label", &scan_fit::BeamFitResult::label)
      .def_readonly("params", &scan_fit::BeamFitResult::params)
      .def_readonly("covariance", &scan_fit::BeamFitResult::covariance)
      .def_readonly("residual_rms", &scan_fit::BeamFitResult::residual_rms)
      .def_readonly("shot_noise_rms", &scan_fit::BeamFitResult::shot_noise_rms)
      .def_readonly("chi2", &scan_fit::BeamFitResult::chi2)
      .def_readonly("dof", &scan_fit::BeamFitResult::dof)
      .def_readonly("iterations", &scan_fit::BeamFitResult::iterations)
      .def_readonly("converged", &scan_fit::BeamFitResult::converged)
      .def_readonly("warnings", &scan_fit::BeamFitResult::warnings)
      .def("sigma", &scan_fit::BeamFitResult::sigma, py::arg("index"))
      .def("to_dict", [](const scan_fit::BeamFitResult& r) { return to_py(io::to_json(r)); });
  m.def(
      "fit_beam",
      [](const ScanDataset& data, const rabi::SpamModel& spam, int max_iterations, bool multi_start) {
        scan_fit::FitOptions opt;
        opt.max_iterations = max_iterations;
        opt.multi_start = multi_start;
        py::gil_scoped_release release;
        return scan_fit::fit_beam(data, spam, opt);
      },
      py::arg("data"), py::arg("spam") = rabi::SpamModel{}, py::arg("max_iterations") = 200,
      py::arg("multi_start") = true);
  m.def(
      "d4sigma",
      [](const std::vector<std::pair<double, double>>& pw) { return scan_fit::d4sigma(pw); },
      py::arg("position_weight"));
  m.def(
      "pair_analysis",
      [](const scan_fit::BeamFitResult& a, const scan_fit::BeamFitResult& b, const ScanDataset& trace_a,
         const ScanDataset& trace_b, double window_s, double floor, const rabi::SpamModel& spam) {
        return to_py(io::to_json(scan_fit::pair_analysis(a, b, {trace_a, trace_b}, window_s, floor, spam)));
      },
      py::arg("a"), py::arg("b"), py::arg("trace_a"), py::arg("trace_b"), py::arg("window_s") = 2.5e-3,
      py::arg("floor") = 0.01, py::arg("spam") = rabi::SpamModel{});
}
