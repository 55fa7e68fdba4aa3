#include "tracediag/trace.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "tracediag/error.hpp"

namespace tracediag {
namespace {

using json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line) + ": " + what, line);
}

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(line, std::string("missing field '") + key + "'");
  return *it;
}

double as_real(const json& v, const char* key, std::size_t line) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s == "NaN") return kNaN;
    if (s == "Inf") return kInf;
    if (s == "-Inf") return -kInf;
  }
  malformed(line, std::string("field '") + key + "' is not a number or NaN/Inf marker");
}

double real_field(const json& obj, const char* key, std::size_t line) {
  return as_real(require(obj, key, line), key, line);
}

std::optional<double> optional_real(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return as_real(*it, key, line);
}

std::uint64_t count_field(const json& obj, const char* key, std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0)) {
    malformed(line, std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool bool_field(const json& obj, const char* key, std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_boolean()) malformed(line, std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

std::string string_field(const json& obj, const char* key, std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_string()) malformed(line, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

LayerStats parse_layer(const json& j, std::size_t line) {
  if (!j.is_object()) malformed(line, "layer entry must be an object");
  LayerStats l;
  l.name = string_field(j, "name", line);
  l.weight_min = real_field(j, "w_min", line);
  l.weight_max = real_field(j, "w_max", line);
  l.weight_mean = real_field(j, "w_mean", line);
  l.weight_std = real_field(j, "w_std", line);
  l.weight_has_nan = bool_field(j, "w_nan", line);
  l.weight_has_inf = bool_field(j, "w_inf", line);
  l.grad_min_abs = real_field(j, "g_min_abs", line);
  l.grad_max_abs = real_field(j, "g_max_abs", line);
  l.grad_mean_abs = real_field(j, "g_mean_abs", line);
  l.grad_has_nan = bool_field(j, "g_nan", line);
  l.grad_has_inf = bool_field(j, "g_inf", line);
  l.grad_zero_fraction = real_field(j, "g_zero_frac", line);
  return l;
}

json parse_json_line(std::string_view text, std::size_t line) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) malformed(line, "expected a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    malformed(line, std::string("invalid JSON: ") + e.what());
  }
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

json real_value(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  return v;
}

json optional_value(const std::optional<double>& v) {
  return v ? real_value(*v) : json(nullptr);
}

bool same_real(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

bool same_optional(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_real(*a, *b);
}

bool same_layer(const LayerStats& a, const LayerStats& b) {
  return a.name == b.name && same_real(a.weight_min, b.weight_min) &&
         same_real(a.weight_max, b.weight_max) && same_real(a.weight_mean, b.weight_mean) &&
         same_real(a.weight_std, b.weight_std) && a.weight_has_nan == b.weight_has_nan &&
         a.weight_has_inf == b.weight_has_inf && same_real(a.grad_min_abs, b.grad_min_abs) &&
         same_real(a.grad_max_abs, b.grad_max_abs) &&
         same_real(a.grad_mean_abs, b.grad_mean_abs) && a.grad_has_nan == b.grad_has_nan &&
         a.grad_has_inf == b.grad_has_inf &&
         same_real(a.grad_zero_fraction, b.grad_zero_fraction);
}

}  // namespace

RunTrace parse_trace(std::string_view text) {
  RunTrace trace;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_blank(line)) {
      if (end == text.size()) break;
      continue;
    }

    const json j = parse_json_line(line, line_no);
    const std::string kind = string_field(j, "kind", line_no);

    if (!have_header) {
      if (kind != "header") malformed(line_no, "first line must be the header record");
      trace.run_id = string_field(j, "run_id", line_no);
      trace.dataset_name = string_field(j, "dataset", line_no);
      trace.interval_policy = string_field(j, "interval_policy", line_no);
      const json& names = require(j, "layer_names", line_no);
      if (!names.is_array()) malformed(line_no, "'layer_names' must be an array");
      for (const auto& n : names) {
        if (!n.is_string()) malformed(line_no, "'layer_names' entries must be strings");
        trace.layer_names.push_back(n.get<std::string>());
      }
      have_header = true;
      continue;
    }

    if (kind != "record") malformed(line_no, "unexpected record kind '" + kind + "'");

    IntervalRecord r;
    r.step_index = count_field(j, "step", line_no);
    r.epoch = count_field(j, "epoch", line_no);
    if (auto it = j.find("batch"); it != j.end() && !it->is_null()) {
      if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
        malformed(line_no, "field 'batch' must be a non-negative integer or null");
      }
      r.batch = it->get<std::uint64_t>();
    }
    r.loss = real_field(j, "loss", line_no);
    r.accuracy = real_field(j, "acc", line_no);
    r.val_loss = optional_real(j, "val_loss", line_no);
    r.val_accuracy = optional_real(j, "val_acc", line_no);

    const json& layers = require(j, "layers", line_no);
    if (!layers.is_array()) malformed(line_no, "'layers' must be an array");
    for (const auto& l : layers) r.layers.push_back(parse_layer(l, line_no));

    bool schema_ok = r.layers.size() == trace.layer_names.size();
    for (std::size_t i = 0; schema_ok && i < r.layers.size(); ++i) {
      schema_ok = r.layers[i].name == trace.layer_names[i];
    }
    if (!schema_ok) {
      throw Error(ErrorKind::SchemaMismatch,
                  "line " + std::to_string(line_no) + ": layer list differs from header",
                  line_no);
    }

    if (!trace.records.empty() && r.step_index <= trace.records.back().step_index) {
      malformed(line_no, "step " + std::to_string(r.step_index) +
                             " does not increase (previous " +
                             std::to_string(trace.records.back().step_index) + ")");
    }
    trace.records.push_back(std::move(r));
  }

  if (!have_header) throw Error(ErrorKind::EmptyTrace, "trace has no header line");
  if (trace.records.empty()) throw Error(ErrorKind::EmptyTrace, "trace has no interval records");
  return trace;
}

RunTrace parse_trace(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

RunTrace load_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open trace file '" + path + "'");
  return parse_trace(in);
}

std::string serialize_trace(const RunTrace& trace) {
  std::string out;
  json header = {{"kind", "header"},
                 {"run_id", trace.run_id},
                 {"dataset", trace.dataset_name},
                 {"interval_policy", trace.interval_policy},
                 {"layer_names", trace.layer_names}};
  out += header.dump();
  out += '\n';

  for (const auto& r : trace.records) {
    json layers = json::array();
    for (const auto& l : r.layers) {
      layers.push_back({{"name", l.name},
                        {"w_min", real_value(l.weight_min)},
                        {"w_max", real_value(l.weight_max)},
                        {"w_mean", real_value(l.weight_mean)},
                        {"w_std", real_value(l.weight_std)},
                        {"w_nan", l.weight_has_nan},
                        {"w_inf", l.weight_has_inf},
                        {"g_min_abs", real_value(l.grad_min_abs)},
                        {"g_max_abs", real_value(l.grad_max_abs)},
                        {"g_mean_abs", real_value(l.grad_mean_abs)},
                        {"g_nan", l.grad_has_nan},
                        {"g_inf", l.grad_has_inf},
                        {"g_zero_frac", real_value(l.grad_zero_fraction)}});
    }
    json rec = {{"kind", "record"},
                {"step", r.step_index},
                {"epoch", r.epoch},
                {"batch", r.batch ? json(*r.batch) : json(nullptr)},
                {"loss", real_value(r.loss)},
                {"acc", real_value(r.accuracy)},
                {"val_loss", optional_value(r.val_loss)},
                {"val_acc", optional_value(r.val_accuracy)},
                {"layers", std::move(layers)}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

bool same_trace(const RunTrace& a, const RunTrace& b) {
  if (a.run_id != b.run_id || a.dataset_name != b.dataset_name ||
      a.interval_policy != b.interval_policy || a.layer_names != b.layer_names ||
      a.records.size() != b.records.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    if (x.step_index != y.step_index || x.epoch != y.epoch || x.batch != y.batch ||
        !same_real(x.loss, y.loss) || !same_real(x.accuracy, y.accuracy) ||
        !same_optional(x.val_loss, y.val_loss) || !same_optional(x.val_accuracy, y.val_accuracy) ||
        x.layers.size() != y.layers.size()) {
      return false;
    }
    for (std::size_t k = 0; k < x.layers.size(); ++k) {
      if (!same_layer(x.layers[k], y.layers[k])) return false;
    }
  }
  return true;
}

std::size_t ValidationReport::error_count() const {
  std::size_t n = 0;
  for (const auto& i : issues) n += i.severity == Severity::Error;
  return n;
}

std::size_t ValidationReport::warning_count() const {
  return issues.size() - error_count();
}

ValidationReport validate_trace(const RunTrace& trace) {
  ValidationReport report;
  auto error = [&](std::string msg, std::optional<std::size_t> rec = std::nullopt) {
    report.issues.push_back({Severity::Error, std::move(msg), rec});
  };
  auto warn = [&](std::string msg) {
    report.issues.push_back({Severity::Warning, std::move(msg), std::nullopt});
  };

  if (trace.records.empty()) {
    error("trace has no interval records");
    return report;
  }
  if (trace.records.size() < 2) warn("fewer than 2 records; features cannot be extracted");

  bool any_val_loss = false;
  bool any_val_acc = false;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    if (i > 0 && r.step_index <= trace.records[i - 1].step_index) {
      error("step_index not strictly increasing", i);
    }
    if (r.layers.size() != trace.layer_names.size()) {
      error("layer count differs from header", i);
    } else {
      for (std::size_t k = 0; k < r.layers.size(); ++k) {
        if (r.layers[k].name != trace.layer_names[k]) {
          error("layer '" + r.layers[k].name + "' does not match header order", i);
          break;
        }
      }
    }
    if (std::isfinite(r.accuracy) && (r.accuracy < 0.0 || r.accuracy > 1.0)) {
      error("accuracy out of [0,1]", i);
    }
    if (r.val_accuracy && std::isfinite(*r.val_accuracy) &&
        (*r.val_accuracy < 0.0 || *r.val_accuracy > 1.0)) {
      error("validation accuracy out of [0,1]", i);
    }
    any_val_loss = any_val_loss || r.val_loss.has_value();
    any_val_acc = any_val_acc || r.val_accuracy.has_value();

    for (const auto& l : r.layers) {
      if (!(l.grad_zero_fraction >= 0.0 && l.grad_zero_fraction <= 1.0)) {
        error("layer '" + l.name + "': g_zero_frac out of [0,1]", i);
      }
      if (!l.weight_has_nan && !(l.weight_min <= l.weight_mean && l.weight_mean <= l.weight_max)) {
        error("layer '" + l.name + "': weight min/mean/max out of order", i);
      }
      if (!l.grad_has_nan &&
          !(l.grad_min_abs <= l.grad_mean_abs && l.grad_mean_abs <= l.grad_max_abs)) {
        error("layer '" + l.name + "': gradient min/mean/max out of order", i);
      }
    }
  }
  if (!any_val_loss || !any_val_acc) {
    warn("validation indicators degenerate: no " +
         std::string(!any_val_loss ? "val_loss" : "val_acc") + " in any record");
  }
  return report;
}

}  // namespace tracediag
