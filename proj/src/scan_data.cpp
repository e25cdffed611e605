#include "ionaddr/scan_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "ionaddr/errors.hpp"

namespace ionaddr {
namespace {

constexpr const char* kHeader = "position_um,duration_us,p1,shots";
constexpr double kSecondsPerUs = 1e-6;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

double parse_double(std::string_view field, const char* name, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(std::string(name) + ": not a number: '" + std::string(field) + "'", line);
  }
  if (!std::isfinite(v)) throw ParseError(std::string(name) + ": must be finite", line);
  return v;
}

// Twelve significant digits: seconds -> microseconds is not exact in binary.
std::string format_duration_us(double duration_s) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof(buf), "%.12g", duration_s / kSecondsPerUs);
  return {buf, static_cast<std::size_t>(n)};
}

}  // namespace

std::vector<double> ScanDataset::positions() const {
  std::set<double> s;
  for (const auto& r : records) s.insert(r.position_um);
  return {s.begin(), s.end()};
}

std::vector<double> ScanDataset::durations() const {
  std::set<double> s;
  for (const auto& r : records) s.insert(r.duration_s);
  return {s.begin(), s.end()};
}

std::vector<ScanRecord> ScanDataset::trace_at(double position_um) const {
  std::vector<ScanRecord> out;
  for (const auto& r : records) {
    if (r.position_um == position_um) out.push_back(r);
  }
  return out;
}

void ScanDataset::validate_records() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string where = "record " + std::to_string(i) + ": ";
    if (!std::isfinite(r.position_um)) throw DomainError(where + "position must be finite");
    if (!(r.duration_s >= 0.0) || !std::isfinite(r.duration_s)) {
      throw DomainError(where + "duration must be finite and >= 0");
    }
    if (!(r.p1 >= 0.0 && r.p1 <= 1.0)) throw DomainError(where + "p1 must lie in [0, 1]");
    if (r.shots < 1) throw DomainError(where + "shots must be >= 1");
  }
}

void ScanDataset::validate_grid() const {
  validate_records();
  if (positions().size() < 4) throw DomainError("scan needs at least 4 distinct positions");
  if (durations().size() < 4) throw DomainError("scan needs at least 4 distinct durations");
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, ptr};
}

void write_scan_csv(std::ostream& out, const ScanDataset& data) {
  out << kHeader << '\n';
  for (const auto& r : data.records) {
    out << format_number(r.position_um) << ',' << format_duration_us(r.duration_s) << ','
        << format_number(r.p1) << ',' << r.shots << '\n';
  }
}

std::string scan_csv_string(const ScanDataset& data) {
  std::ostringstream os;
  write_scan_csv(os, data);
  return os.str();
}

ScanDataset read_scan_csv(std::istream& in, std::string label) {
  ScanDataset data;
  data.label = std::move(label);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (!header_seen) {
      if (view != kHeader) {
        throw ParseError(std::string("expected header '") + kHeader + "'", line_no);
      }
      header_seen = true;
      continue;
    }
    const auto fields = split(view);
    if (fields.size() != 4) {
      throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), line_no);
    }
    ScanRecord r;
    r.position_um = parse_double(fields[0], "position_um", line_no);
    const double duration_us = parse_double(fields[1], "duration_us", line_no);
    if (duration_us < 0.0) throw ParseError("duration_us: must be >= 0", line_no);
    r.duration_s = duration_us * kSecondsPerUs;
    r.p1 = parse_double(fields[2], "p1", line_no);
    if (r.p1 < 0.0 || r.p1 > 1.0) throw ParseError("p1: must lie in [0, 1]", line_no);
    long shots = 0;
    const auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), shots);
    if (ec != std::errc() || ptr != fields[3].data() + fields[3].size() || fields[3].empty()) {
      throw ParseError("shots: not an integer: '" + std::string(fields[3]) + "'", line_no);
    }
    if (shots < 1) throw ParseError("shots: must be >= 1", line_no);
    r.shots = shots;
    data.records.push_back(r);
  }
  if (!header_seen) throw ParseError("empty scan file (no header)", line_no);
  if (data.records.empty()) throw ParseError("scan file has no records", line_no);
  return data;
}

ScanDataset read_scan_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  return read_scan_csv(in);
}

}  // namespace ionaddr
