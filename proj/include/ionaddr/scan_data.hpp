#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ionaddr {

struct ScanRecord {
  double position_um = 0.0;
  double duration_s = 0.0;
  double p1 = 0.0;
  long shots = 1;
};

/// Excitation-probability measurements over (ion position, pulse duration).
struct ScanDataset {
  std::string label;
  double position_resolution_um = 0.0;
  std::vector<ScanRecord> records;

  /// Sorted distinct values.
  std::vector<double> positions() const;
  std::vector<double> durations() const;
  /// Records at one position, in stored order.
  std::vector<ScanRecord> trace_at(double position_um) const;

  /// Per-record field checks (p1 in [0,1], shots >= 1, finite, non-negative).
  void validate_records() const;
  /// Adds the 2D-grid requirements: >= 4 distinct positions and durations.
  void validate_grid() const;
};

/// CSV with header `position_um,duration_us,p1,shots`. Numbers are written in
/// shortest round-trip form so identical datasets give identical bytes.
void write_scan_csv(std::ostream& out, const ScanDataset& data);
std::string scan_csv_string(const ScanDataset& data);
/// Throws ParseError with the 1-based line of the first bad field.
ScanDataset read_scan_csv(std::istream& in, std::string label = "");
ScanDataset read_scan_csv_file(const std::string& path);

/// Shortest round-trip decimal form of `v`.
std::string format_number(double v);

}  // namespace ionaddr
