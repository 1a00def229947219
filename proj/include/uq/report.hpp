#ifndef UQ_REPORT_HPP
#define UQ_REPORT_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace uq::report {

// A table cell: a finite number, a text label, or the `failed` marker.
// Non-finite numbers become `failed` so NaN never reaches the output.
struct Cell {
  enum class Kind { number, text, failed };
  Kind kind = Kind::failed;
  double num = 0.0;
  std::string text;

  static Cell number(double v);
  static Cell of(const std::string& s);
  static Cell failed();
};

// Tabular experiment results plus the metadata needed to reproduce them
// (config echo, seed, timestamp, version).
struct ExperimentReport {
  std::string experiment;  // screen | sensitivity | misspec | worstcase | concentration
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  nlohmann::ordered_json metadata;

  void add_row(std::vector<Cell> cells);
};

enum class Format { csv, json };

Format format_from_name(const std::string& name);

// Shortest representation that round-trips to the same double.
std::string format_double(double v);

// CSV: metadata as leading `#` comment lines, one header row, RFC 4180
// quoting. JSON: single object {"experiment", "metadata", "columns",
// "rows"}. Both are byte-stable for identical reports.
void emit(const ExperimentReport& report, Format format, std::ostream& out);
void emit_file(const ExperimentReport& report, Format format, const std::string& path);

// Parses the JSON emission back into a report (round-trip testing and
// downstream tooling).
ExperimentReport parse_json(std::istream& in);

}  // namespace uq::report

#endif  // UQ_REPORT_HPP
