#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tracediag {

/// Summary of one layer's weights and gradients at a recording point.
/// Gradient magnitudes are absolute values.
struct LayerStats {
  std::string name;
  double weight_min = 0.0;
  double weight_max = 0.0;
  double weight_mean = 0.0;
  double weight_std = 0.0;
  bool weight_has_nan = false;
  bool weight_has_inf = false;
  double grad_min_abs = 0.0;
  double grad_max_abs = 0.0;
  double grad_mean_abs = 0.0;
  bool grad_has_nan = false;
  bool grad_has_inf = false;
  double grad_zero_fraction = 0.0;
};

/// One telemetry record. Missing validation metrics are std::nullopt;
/// a present-but-NaN metric is a quiet NaN.
struct IntervalRecord {
  std::uint64_t step_index = 0;
  std::uint64_t epoch = 0;
  std::optional<std::uint64_t> batch;
  double loss = 0.0;
  double accuracy = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;
  std::vector<LayerStats> layers;
};

struct RunTrace {
  std::string run_id;
  std::string dataset_name;
  std::string interval_policy;
  std::vector<std::string> layer_names;
  std::vector<IntervalRecord> records;
};

/// Parses the line-delimited JSON trace format. Line 1 is the header; every
/// following non-blank line is one interval record.
///
/// Throws Error with kind MalformedRecord (with the offending 1-based line,
/// including step-order violations), SchemaMismatch (a record's layer list
/// differs from the header) or EmptyTrace (no interval records).
RunTrace parse_trace(std::string_view text);
RunTrace parse_trace(std::istream& in);
RunTrace load_trace_file(const std::string& path);

/// Serializes back to the interchange format. NaN/Inf become the strings
/// "NaN", "Inf" and "-Inf".
std::string serialize_trace(const RunTrace& trace);

/// Field-by-field equality with NaN == NaN.
bool same_trace(const RunTrace& a, const RunTrace& b);

enum class Severity { Warning, Error };

struct ValidationIssue {
  Severity severity = Severity::Error;
  std::string message;
  std::optional<std::size_t> record;  // index into RunTrace::records
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool empty() const { return issues.empty(); }
  std::size_t error_count() const;
  std::size_t warning_count() const;
};

ValidationReport validate_trace(const RunTrace& trace);

}  // namespace tracediag
