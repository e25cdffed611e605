// ionaddr: design curves, beam propagation, synthetic scans, fitting and pair
// analysis for an AOM-array individual-addressing beam line.
//
// Exit codes: 0 ok, 1 I/O failure, 2 validation error, 3 numerical failure.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ionaddr/design.hpp"
#include "ionaddr/errors.hpp"
#include "ionaddr/io.hpp"
#include "ionaddr/rabi.hpp"
#include "ionaddr/scan_data.hpp"
#include "ionaddr/scan_fit.hpp"
#include "ionaddr/synth.hpp"
#include "ionaddr/system_model.hpp"

#ifndef IONADDR_VERSION
#define IONADDR_VERSION "dev"
#endif

namespace fs = std::filesystem;
using ionaddr::io::json;

namespace {

enum ExitCode { kOk = 0, kIoError = 1, kValidation = 2, kNumerical = 3 };

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

struct DesignOptions {
  double na_cap = 0.24;
  double wavelength_um = 0.355;
  double neighbor_um = 5.0;
  std::vector<double> range = {1.5, 8.0};
  int samples = 200;
};

struct PropagateOptions {
  std::string prescription;
  double diameter_um = 200.0;
  double pitch_um = 450.0;
  int count = 32;
  double wavelength_um = 0.355;
  double measured_pitch_um = 0.0;
  double measured_err_um = 0.0;
  double k_sigma = 3.0;
};

struct SpamOptions {
  double prep = 0.01;
  double meas = 0.01;
  ionaddr::rabi::SpamModel model() const { return {prep, meas}; }
};

struct SynthOptions {
  std::vector<std::string> beams;
  double span_um = 4.5;
  double pos_min = std::numeric_limits<double>::quiet_NaN();
  double pos_max = std::numeric_limits<double>::quiet_NaN();
  int pos_count = 61;
  double dur_min_us = 0.0;
  double dur_max_us = 1000.0;
  int dur_count = 21;
  long shots = 200;
  bool analytic = false;
  double jitter_um = 0.0;
  SpamOptions spam;
};

struct FitOptionsCli {
  std::string scan;
  std::string label;
  int max_iterations = 200;
  SpamOptions spam;
};

struct PairOptions {
  std::string fit_a;
  std::string fit_b;
  std::string trace_a;
  std::string trace_b;
  double window_ms = 2.5;
  double floor = 0.01;
  SpamOptions spam;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Run {
 public:
  Run(std::string subcommand, const GlobalOptions& global) : name_(std::move(subcommand)), global_(global) {
    std::error_code ec;
    fs::create_directories(global_.out_dir, ec);
    if (ec) throw std::ios_base::failure("cannot create " + global_.out_dir + ": " + ec.message());
  }

  std::string path(const std::string& file) const { return (fs::path(global_.out_dir) / file).string(); }

  void input(const std::string& p) { inputs_.push_back(p); }

  void write(const std::string& file, const std::string& contents) {
    const std::string p = path(file);
    ionaddr::io::write_file_atomic(p, contents);
    outputs_.push_back(p);
  }

  void write_json(const std::string& file, const json& j) { write(file, j.dump(2) + "\n"); }

  void finish(const json& config) {
    const json manifest = {{"subcommand", name_},
                           {"tool_version", IONADDR_VERSION},
                           {"timestamp", utc_timestamp()},
                           {"seed", global_.seed},
                           {"config", config},
                           {"inputs", inputs_},
                           {"outputs", outputs_}};
    ionaddr::io::write_file_atomic(path("manifest_" + name_ + ".json"), manifest.dump(2) + "\n");
  }

 private:
  std::string name_;
  GlobalOptions global_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

json spam_json(const SpamOptions& s) { return {{"eps_prep", s.prep}, {"eps_meas", s.meas}}; }

void validate_spam(const SpamOptions& s) {
  require(s.prep >= 0.0 && s.prep < 0.5, "--spam-prep must lie in [0, 0.5)");
  require(s.meas >= 0.0 && s.meas < 0.5, "--spam-meas must lie in [0, 0.5)");
}

void add_spam_flags(CLI::App* cmd, SpamOptions& s) {
  cmd->add_option("--spam-prep", s.prep, "Probability |0> reads bright")->capture_default_str();
  cmd->add_option("--spam-meas", s.meas, "Probability |1> reads dark")->capture_default_str();
}

int cmd_design(const GlobalOptions& g, const DesignOptions& o) {
  require(o.na_cap > 0.0 && o.na_cap < 1.0, "--na-cap must lie in (0, 1)");
  require(o.wavelength_um > 0.0, "--wavelength-um must be positive");
  require(o.neighbor_um > 0.0, "--neighbor-um must be positive");
  require(o.range.size() == 2 && o.range[0] > 0.0 && o.range[1] > o.range[0],
          "--range must be two increasing positive diameters");
  require(o.samples >= 2, "--samples must be >= 2");

  Run run("design", g);
  const ionaddr::design::DesignConstraints c{o.wavelength_um, o.neighbor_um, o.na_cap};
  const auto curve = ionaddr::design::tradeoff_curve(c, o.range[0], o.range[1], o.samples);
  run.write("tradeoff.csv", ionaddr::io::tradeoff_csv(curve));
  run.write_json("design_summary.json",
                 {{"boundary", ionaddr::io::to_json(curve.boundary)},
                  {"boundary_in_range", curve.boundary_in_range},
                  {"constraints",
                   {{"na_cap", c.na_cap}, {"wavelength_um", c.wavelength_um},
                    {"neighbor_distance_um", c.neighbor_distance_um}}},
                  {"rows", curve.points.size()}});
  run.finish({{"na_cap", o.na_cap}, {"wavelength_um", o.wavelength_um}, {"neighbor_um", o.neighbor_um},
              {"range_um", o.range}, {"samples", o.samples}});
  std::cout << "boundary diameter " << curve.boundary.beam_diameter_um << " um, crosstalk "
            << curve.boundary.crosstalk << "\n";
  return kOk;
}

int cmd_propagate(const GlobalOptions& g, const PropagateOptions& o) {
  require(o.diameter_um > 0.0, "--diameter-um must be positive");
  require(o.pitch_um > 0.0, "--pitch-um must be positive");
  require(o.count >= 1, "--count must be >= 1");
  require(o.wavelength_um > 0.0, "--wavelength-um must be positive");
  const bool compare = o.measured_pitch_um > 0.0;
  if (compare) require(o.measured_err_um > 0.0, "--measured-err-um must be positive");

  Run run("propagate", g);
  run.input(o.prescription);
  const auto p = ionaddr::io::read_prescription_file(o.prescription);
  const ionaddr::system_model::BeamArraySpec arr{o.count, o.pitch_um, o.diameter_um, o.wavelength_um};
  const auto report = ionaddr::system_model::image_array(p, arr);
  json out = ionaddr::io::to_json(report);
  out["source"] = {{"diameter_um", o.diameter_um}, {"pitch_um", o.pitch_um}, {"count", o.count},
                   {"wavelength_um", o.wavelength_um}};
  if (compare) {
    out["pitch_check"] = ionaddr::io::to_json(
        ionaddr::system_model::compare_measured_pitch(report, o.measured_pitch_um, o.measured_err_um, o.k_sigma));
  }
  run.write_json("image_plane.json", out);
  run.finish({{"prescription", o.prescription}, {"source", out["source"]}});
  std::cout << "axial " << report.axial.image_diameter_um << " um, radial " << report.radial.image_diameter_um
            << " um, pitch " << report.image_pitch_um << " um\n";
  return kOk;
}

ionaddr::synth::BeamTruth parse_beam(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, ',');) parts.push_back(part);
  require(parts.size() == 4, "--beam expects label,omega0_khz,center_um,w0_um; got '" + spec + "'");
  ionaddr::synth::BeamTruth b;
  b.label = parts[0];
  require(!b.label.empty(), "--beam label must be nonempty");
  try {
    b.params = {ionaddr::rabi::hz_to_angular(std::stod(parts[1]) * 1e3), std::stod(parts[2]), std::stod(parts[3])};
  } catch (const std::exception&) {
    throw ValidationError("--beam has a non-numeric field: '" + spec + "'");
  }
  require(b.params.omega0 >= 0.0 && b.params.w0 > 0.0, "--beam needs omega0 >= 0 and w0 > 0");
  return b;
}

int cmd_synth(const GlobalOptions& g, const SynthOptions& o) {
  require(o.shots >= 1, "--shots must be >= 1");
  require(o.pos_count >= 1, "--pos-count must be >= 1");
  require(o.dur_count >= 1, "--dur-count must be >= 1");
  require(o.dur_min_us >= 0.0 && (o.dur_count == 1 || o.dur_max_us > o.dur_min_us),
          "--dur-min-us/--dur-max-us must satisfy 0 <= min < max");
  require(o.jitter_um >= 0.0, "--jitter-um must be >= 0");
  require(std::isnan(o.pos_min) == std::isnan(o.pos_max), "--pos-min and --pos-max go together");
  validate_spam(o.spam);

  std::vector<ionaddr::synth::BeamTruth> beams;
  for (const auto& spec : o.beams) beams.push_back(parse_beam(spec));
  if (beams.empty()) {
    beams.push_back({"A", {ionaddr::rabi::hz_to_angular(1.91e3), 0.0, 1.86}});
  }

  Run run("synth", g);
  json produced = json::array();
  for (std::size_t i = 0; i < beams.size(); ++i) {
    ionaddr::synth::SynthConfig cfg;
    cfg.beams = {beams[i]};
    const bool explicit_grid = !std::isnan(o.pos_min);
    const double lo = explicit_grid ? o.pos_min : beams[i].params.x_c - o.span_um;
    const double hi = explicit_grid ? o.pos_max : beams[i].params.x_c + o.span_um;
    require(o.pos_count == 1 || hi > lo, "position grid must be increasing");
    cfg.positions_um = ionaddr::synth::linspace(lo, hi, o.pos_count);
    cfg.durations_s = ionaddr::synth::linspace(o.dur_min_us * 1e-6, o.dur_max_us * 1e-6, o.dur_count);
    cfg.shots = o.shots;
    cfg.spam = o.spam.model();
    cfg.seed = g.seed + i;
    cfg.analytic = o.analytic;
    auto data = ionaddr::synth::generate(cfg).front();
    if (o.jitter_um > 0.0) data = ionaddr::synth::position_jitter(data, o.jitter_um, g.seed + i);
    const std::string file = "scan_" + beams[i].label + ".csv";
    run.write(file, ionaddr::scan_csv_string(data));
    produced.push_back({{"label", beams[i].label},
                        {"omega0_hz", ionaddr::rabi::angular_to_hz(beams[i].params.omega0)},
                        {"x_c_um", beams[i].params.x_c},
                        {"w0_um", beams[i].params.w0},
                        {"seed", cfg.seed},
                        {"positions", {lo, hi, o.pos_count}},
                        {"file", file}});
  }
  run.finish({{"beams", produced},
              {"durations_us", {o.dur_min_us, o.dur_max_us, o.dur_count}},
              {"shots", o.shots},
              {"analytic", o.analytic},
              {"jitter_um", o.jitter_um},
              {"spam", spam_json(o.spam)}});
  std::cout << "wrote " << beams.size() << " scan(s) to " << g.out_dir << "\n";
  return kOk;
}

std::string label_from_path(const std::string& path) {
  std::string stem = fs::path(path).stem().string();
  if (stem.rfind("scan_", 0) == 0) stem = stem.substr(5);
  return stem.empty() ? "beam" : stem;
}

ionaddr::ScanDataset load_scan(const std::string& path) {
  try {
    return ionaddr::read_scan_csv_file(path);
  } catch (const ionaddr::ParseError& e) {
    throw ionaddr::ParseError(path + ": " + e.what());
  }
}

int cmd_fit(const GlobalOptions& g, const FitOptionsCli& o) {
  require(o.max_iterations >= 1, "--max-iter must be >= 1");
  validate_spam(o.spam);
  Run run("fit", g);
  run.input(o.scan);
  auto data = load_scan(o.scan);
  data.label = o.label.empty() ? label_from_path(o.scan) : o.label;

  ionaddr::scan_fit::FitOptions fo;
  fo.max_iterations = o.max_iterations;
  const json config = {{"scan", o.scan}, {"label", data.label}, {"max_iterations", o.max_iterations},
                       {"spam", spam_json(o.spam)}};
  int code = kOk;
  ionaddr::scan_fit::BeamFitResult result;
  try {
    result = ionaddr::scan_fit::fit_beam(data, o.spam.model(), fo);
  } catch (const ionaddr::scan_fit::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << " (best-so-far report written)\n";
    result = e.best();
    code = kNumerical;
  }
  run.write_json("fit_" + data.label + ".json", ionaddr::io::to_json(result));
  run.write("freq_profile_" + data.label + ".csv", ionaddr::io::freq_profile_csv(result.freq_profile));
  run.finish(config);
  std::cout << "omega0 = 2pi x " << ionaddr::rabi::angular_to_hz(result.params.omega0) << " Hz, x_c = "
            << result.params.x_c << " um, w0 = " << result.params.w0 << " um\n";
  return code;
}

int cmd_pair(const GlobalOptions& g, const PairOptions& o) {
  require(o.window_ms > 0.0, "--window-ms must be positive");
  require(o.floor > 0.0 && o.floor < 1.0, "--floor must lie in (0, 1)");
  validate_spam(o.spam);
  Run run("pair", g);
  for (const auto* p : {&o.fit_a, &o.fit_b, &o.trace_a, &o.trace_b}) run.input(*p);

  auto load_fit = [](const std::string& path) {
    try {
      return ionaddr::io::fit_result_from_json(ionaddr::io::read_json_file(path));
    } catch (const ionaddr::ParseError& e) {
      throw ionaddr::ParseError(path + e.what());
    }
  };
  const auto a = load_fit(o.fit_a);
  const auto b = load_fit(o.fit_b);
  require(a.converged && b.converged, "--fit-a and --fit-b must both be converged fits");
  const auto report = ionaddr::scan_fit::pair_analysis(a, b, {load_scan(o.trace_a), load_scan(o.trace_b)},
                                                       o.window_ms * 1e-3, o.floor, o.spam.model());
  run.write_json("pair_report.json", ionaddr::io::to_json(report));
  run.finish({{"fit_a", o.fit_a}, {"fit_b", o.fit_b}, {"trace_a", o.trace_a}, {"trace_b", o.trace_b},
              {"window_ms", o.window_ms}, {"floor", o.floor}, {"spam", spam_json(o.spam)}});
  std::cout << "separation " << report.separation_um << " +/- " << report.separation_uncertainty_um
            << " um; crosstalk bound A " << report.a.crosstalk_bound << ", B " << report.b.crosstalk_bound
            << "\n";
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Individual-addressing beam design and ion-probe characterization"};
  app.set_version_flag("--version", IONADDR_VERSION);
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI config file; [subcommand] sections hold its flags");

  GlobalOptions global;
  app.add_option("--out-dir", global.out_dir, "Directory for outputs and the run manifest")->capture_default_str();
  app.add_option("--seed", global.seed, "Seed for synthetic data")->capture_default_str();

  DesignOptions design;
  auto* design_cmd = app.add_subcommand("design", "Crosstalk / required-NA tradeoff curve");
  design_cmd->add_option("--na-cap", design.na_cap, "Objective NA")->capture_default_str();
  design_cmd->add_option("--wavelength-um", design.wavelength_um)->capture_default_str();
  design_cmd->add_option("--neighbor-um", design.neighbor_um, "Ion spacing")->capture_default_str();
  design_cmd->add_option("--range", design.range, "Diameter range, two values in um")->expected(2);
  design_cmd->add_option("--samples", design.samples)->capture_default_str();

  PropagateOptions prop;
  auto* prop_cmd = app.add_subcommand("propagate", "Image an AOM beam array through a prescription");
  prop_cmd->add_option("--prescription", prop.prescription, "Prescription JSON")->required();
  prop_cmd->add_option("--diameter-um", prop.diameter_um, "Source beam diameter (2 w0)")->capture_default_str();
  prop_cmd->add_option("--pitch-um", prop.pitch_um)->capture_default_str();
  prop_cmd->add_option("--count", prop.count, "Channel count")->capture_default_str();
  prop_cmd->add_option("--wavelength-um", prop.wavelength_um)->capture_default_str();
  prop_cmd->add_option("--measured-pitch-um", prop.measured_pitch_um, "Compare against a measured pitch");
  prop_cmd->add_option("--measured-err-um", prop.measured_err_um);
  prop_cmd->add_option("--k-sigma", prop.k_sigma)->capture_default_str();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic scan CSVs");
  synth_cmd->add_option("--beam", synth.beams, "label,omega0_khz,center_um,w0_um (repeatable)");
  synth_cmd->add_option("--span-um", synth.span_um, "Half-width of the grid around each center")->capture_default_str();
  synth_cmd->add_option("--pos-min", synth.pos_min, "Explicit grid start (um)");
  synth_cmd->add_option("--pos-max", synth.pos_max, "Explicit grid end (um)");
  synth_cmd->add_option("--pos-count", synth.pos_count)->capture_default_str();
  synth_cmd->add_option("--dur-min-us", synth.dur_min_us)->capture_default_str();
  synth_cmd->add_option("--dur-max-us", synth.dur_max_us)->capture_default_str();
  synth_cmd->add_option("--dur-count", synth.dur_count)->capture_default_str();
  synth_cmd->add_option("--shots", synth.shots)->capture_default_str();
  synth_cmd->add_flag("--analytic", synth.analytic, "Write exact probabilities (no shot noise)");
  synth_cmd->add_option("--jitter-um", synth.jitter_um, "Recorded-position resolution")->capture_default_str();
  add_spam_flags(synth_cmd, synth.spam);

  FitOptionsCli fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a scan CSV to the Gaussian Rabi model");
  fit_cmd->add_option("--scan", fit.scan, "Scan CSV")->required();
  fit_cmd->add_option("--label", fit.label, "Beam label (default: from file name)");
  fit_cmd->add_option("--max-iter", fit.max_iterations)->capture_default_str();
  add_spam_flags(fit_cmd, fit.spam);

  PairOptions pair;
  auto* pair_cmd = app.add_subcommand("pair", "Separation and crosstalk bound for two fitted beams");
  pair_cmd->add_option("--fit-a", pair.fit_a, "Fit JSON of beam A")->required();
  pair_cmd->add_option("--fit-b", pair.fit_b, "Fit JSON of beam B")->required();
  pair_cmd->add_option("--trace-a", pair.trace_a, "Trace at B's center while A drives")->required();
  pair_cmd->add_option("--trace-b", pair.trace_b, "Trace at A's center while B drives")->required();
  pair_cmd->add_option("--window-ms", pair.window_ms)->capture_default_str();
  pair_cmd->add_option("--floor", pair.floor, "Detection floor probability")->capture_default_str();
  add_spam_flags(pair_cmd, pair.spam);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    if (*design_cmd) return cmd_design(global, design);
    if (*prop_cmd) return cmd_propagate(global, prop);
    if (*synth_cmd) return cmd_synth(global, synth);
    if (*fit_cmd) return cmd_fit(global, fit);
    if (*pair_cmd) return cmd_pair(global, pair);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ionaddr::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ionaddr::SingularityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const ionaddr::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kValidation;
}
