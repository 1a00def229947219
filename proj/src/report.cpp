#include "uq/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <system_error>

#include "uq/errors.hpp"

namespace uq::report {

namespace {

constexpr const char* kFailedLiteral = "failed";

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

void write_csv_field(std::ostream& out, const std::string& s) {
  if (!needs_quoting(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

std::string cell_string(const Cell& cell) {
  switch (cell.kind) {
    case Cell::Kind::number: return format_double(cell.num);
    case Cell::Kind::text: return cell.text;
    case Cell::Kind::failed: return kFailedLiteral;
  }
  return kFailedLiteral;
}

}  // namespace

Cell Cell::number(double v) {
  if (!std::isfinite(v)) return failed();
  Cell c;
  c.kind = Kind::number;
  c.num = v;
  return c;
}

Cell Cell::of(const std::string& s) {
  Cell c;
  c.kind = Kind::text;
  c.text = s;
  return c;
}

Cell Cell::failed() {
  Cell c;
  c.kind = Kind::failed;
  return c;
}

void ExperimentReport::add_row(std::vector<Cell> cells) {
  if (cells.size() != columns.size())
    throw DimensionError("report row has " + std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(columns.size()));
  rows.push_back(std::move(cells));
}

Format format_from_name(const std::string& name) {
  if (name == "csv") return Format::csv;
  if (name == "json") return Format::json;
  throw ConfigError("unknown output format '" + name + "' (expected csv or json)");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw ComputationError("double formatting failed");
  return std::string(buf, ptr);
}

namespace {

void emit_csv(const ExperimentReport& report, std::ostream& out) {
  out << "# experiment: " << report.experiment << "\n";
  for (const auto& [key, value] : report.metadata.items())
    out << "# " << key << ": " << value.dump() << "\n";
  for (std::size_t i = 0; i < report.columns.size(); ++i) {
    if (i) out << ',';
    write_csv_field(out, report.columns[i]);
  }
  out << "\n";
  for (const auto& row : report.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      write_csv_field(out, cell_string(row[i]));
    }
    out << "\n";
  }
}

nlohmann::ordered_json cell_json(const Cell& cell) {
  switch (cell.kind) {
    case Cell::Kind::number: return cell.num;
    case Cell::Kind::text: return cell.text;
    case Cell::Kind::failed: return kFailedLiteral;
  }
  return kFailedLiteral;
}

void emit_json(const ExperimentReport& report, std::ostream& out) {
  nlohmann::ordered_json doc;
  doc["experiment"] = report.experiment;
  doc["metadata"] = report.metadata;
  doc["columns"] = report.columns;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json obj;
    for (std::size_t i = 0; i < row.size(); ++i) obj[report.columns[i]] = cell_json(row[i]);
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  out << doc.dump(2) << "\n";
}

}  // namespace

void emit(const ExperimentReport& report, Format format, std::ostream& out) {
  if (format == Format::csv)
    emit_csv(report, out);
  else
    emit_json(report, out);
  if (!out) throw IoError("write failed while emitting report");
}

void emit_file(const ExperimentReport& report, Format format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("could not open output file '" + path + "'");
  emit(report, format, out);
  out.flush();
  if (!out) throw IoError("write failed for output file '" + path + "'");
}

ExperimentReport parse_json(std::istream& in) {
  nlohmann::ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid report JSON: ") + e.what());
  }
  ExperimentReport report;
  report.experiment = doc.at("experiment").get<std::string>();
  report.metadata = doc.at("metadata");
  report.columns = doc.at("columns").get<std::vector<std::string>>();
  for (const auto& row : doc.at("rows")) {
    std::vector<Cell> cells;
    cells.reserve(report.columns.size());
    for (const auto& col : report.columns) {
      const auto& v = row.at(col);
      if (v.is_number())
        cells.push_back(Cell::number(v.get<double>()));
      else if (v.is_string() && v.get<std::string>() == kFailedLiteral)
        cells.push_back(Cell::failed());
      else
        cells.push_back(Cell::of(v.get<std::string>()));
    }
    report.add_row(std::move(cells));
  }
  return report;
}

}  // namespace uq::report
