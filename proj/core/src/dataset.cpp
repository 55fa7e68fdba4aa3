#include "tracediag/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include "tracediag/error.hpp"

namespace tracediag {
namespace {

std::string label_column(FaultType t) { return "label_" + std::string(fault_name(t)); }

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorKind::MalformedRecord, "unterminated quoted field", line_no);
  fields.push_back(std::move(cur));
  return fields;
}

double parse_value(const std::string& s, std::size_t line_no) {
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf" || s == "Inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf" || s == "-Inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(ErrorKind::MalformedRecord, "not a number: '" + s + "'", line_no);
  }
  return v;
}

}  // namespace

void write_feature_csv(std::ostream& out, const FeatureTable& table) {
  out << "run_id";
  for (const auto& name : feature_names()) out << ',' << name;
  if (table.has_labels) {
    for (FaultType t : kAllFaultTypes) out << ',' << label_column(t);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    out << quote(row.run_id);
    for (double v : row.features) out << ',' << format_value(v);
    if (table.has_labels) {
      for (FaultType t : kAllFaultTypes) out << ',' << (row.labels.contains(t) ? 1 : 0);
    }
    out << '\n';
  }
}

FeatureTable read_feature_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (line_no == 0 || line.find_first_not_of(" \t\r") == std::string::npos) {
    throw Error(ErrorKind::SchemaMismatch, "feature CSV has no header");
  }
  const auto header = split_csv(line, line_no);
  std::map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!columns.emplace(header[i], i).second) {
      throw Error(ErrorKind::SchemaMismatch, "duplicated column '" + header[i] + "'");
    }
  }

  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = columns.find(name);
    if (it == columns.end()) return std::nullopt;
    return it->second;
  };

  const auto id_col = find("run_id");
  std::vector<std::size_t> feature_cols;
  for (const auto& name : feature_names()) {
    const auto col = find(name);
    if (!col) throw Error(ErrorKind::SchemaMismatch, "missing feature column '" + name + "'");
    feature_cols.push_back(*col);
  }
  std::vector<std::size_t> label_cols;
  for (FaultType t : kAllFaultTypes) {
    if (const auto col = find(label_column(t))) label_cols.push_back(*col);
  }
  if (!label_cols.empty() && label_cols.size() != kFaultTypeCount) {
    throw Error(ErrorKind::SchemaMismatch, "incomplete label columns");
  }

  FeatureTable table;
  table.has_labels = !label_cols.empty();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line, line_no);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::MalformedRecord,
                  "expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()),
                  line_no);
    }
    FeatureRow row;
    row.run_id = id_col ? fields[*id_col] : "row" + std::to_string(table.rows.size());
    row.features.reserve(kFeatureCount);
    for (std::size_t col : feature_cols) row.features.push_back(parse_value(fields[col], line_no));
    for (std::size_t k = 0; k < label_cols.size(); ++k) {
      const std::string& v = fields[label_cols[k]];
      if (v == "1" || v == "true") {
        row.labels.insert(kAllFaultTypes[k]);
      } else if (v != "0" && v != "false") {
        throw Error(ErrorKind::MalformedRecord, "label value must be 0 or 1", line_no);
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

FeatureTable load_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read '" + path.string() + "'");
  return read_feature_csv(in);
}

std::vector<LabeledSample> to_labeled_samples(const FeatureTable& table) {
  if (!table.has_labels) throw Error(ErrorKind::SchemaMismatch, "feature CSV has no label columns");
  std::vector<LabeledSample> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back({row.features, row.labels, row.run_id});
  return out;
}

}  // namespace tracediag
