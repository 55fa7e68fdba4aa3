#include "config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"
#include "tracediag/error.hpp"

namespace tracediag::cli {
namespace {

using json = nlohmann::json;
using Setter = std::function<void(const json&)>;

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorKind::SchemaMismatch, msg); }

template <typename T>
Setter field(T& target, std::string key) {
  return [&target, key](const json& v) {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) schema("'" + key + "' must be a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) schema("'" + key + "' must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
          schema("'" + key + "' must be non-negative");
        }
      }
    } else {
      if (!v.is_number()) schema("'" + key + "' must be a number");
    }
    target = v.get<T>();
  };
}

void apply(const json& obj, const std::string& where, const std::map<std::string, Setter>& fields) {
  if (!obj.is_object()) schema("'" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) schema("unknown config key '" + where + key + "'");
    it->second(value);
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (runs_per_program < 1) throw Error(ErrorKind::InvalidParams, "runs_per_program must be >= 1");
  if (jobs < 0) throw Error(ErrorKind::InvalidParams, "jobs must be >= 0");
  if (!(kill.alpha > 0.0 && kill.alpha <= 1.0)) {
    throw Error(ErrorKind::InvalidParams, "alpha must lie in (0,1]");
  }
  if (!(kill.beta >= 0.0)) throw Error(ErrorKind::InvalidParams, "beta must be >= 0");
  indicators.validate();
  classifiers.validate();
  for (const auto* p : {&paths.traces_dir, &paths.program}) {
    if (!p->empty() && !std::filesystem::exists(*p)) {
      throw Error(ErrorKind::Io, "configured path '" + *p + "' does not exist");
    }
  }
}

PipelineConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    schema(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  IndicatorConfig& ind = c.indicators;
  ClassifierParams& cls = c.classifiers;

  const std::map<std::string, Setter> indicator_fields = {
      {"large_weight_threshold", field(ind.large_weight_threshold, "large_weight_threshold")},
      {"const_tolerance", field(ind.const_tolerance, "const_tolerance")},
      {"gap_threshold", field(ind.gap_threshold, "gap_threshold")},
      {"slow_converge_window", field(ind.slow_converge_window, "slow_converge_window")},
      {"slow_converge_min_gain", field(ind.slow_converge_min_gain, "slow_converge_min_gain")},
      {"slow_converge_acc_ceiling", field(ind.slow_converge_acc_ceiling, "slow_converge_acc_ceiling")},
      {"oscillation_window", field(ind.oscillation_window, "oscillation_window")},
      {"oscillation_min_flips", field(ind.oscillation_min_flips, "oscillation_min_flips")},
      {"dying_relu_zero_fraction", field(ind.dying_relu_zero_fraction, "dying_relu_zero_fraction")},
      {"dying_relu_acc_ceiling", field(ind.dying_relu_acc_ceiling, "dying_relu_acc_ceiling")},
      {"dying_relu_window", field(ind.dying_relu_window, "dying_relu_window")},
      {"vanish_threshold", field(ind.vanish_threshold, "vanish_threshold")},
      {"explode_threshold", field(ind.explode_threshold, "explode_threshold")},
      {"problem_acc_ceiling", field(ind.problem_acc_ceiling, "problem_acc_ceiling")},
  };
  const std::map<std::string, Setter> knn_fields = {{"k", field(cls.knn.k, "k")}};
  const std::map<std::string, Setter> tree_fields = {
      {"max_depth", field(cls.tree.max_depth, "max_depth")},
      {"min_samples_split", field(cls.tree.min_samples_split, "min_samples_split")}};
  const std::map<std::string, Setter> forest_fields = {
      {"trees", field(cls.forest.trees, "trees")},
      {"max_features", field(cls.forest.max_features, "max_features")},
      {"max_depth", field(cls.forest.tree.max_depth, "max_depth")},
      {"min_samples_split", field(cls.forest.tree.min_samples_split, "min_samples_split")}};
  const std::map<std::string, Setter> classifier_fields = {
      {"knn", [&](const json& v) { apply(v, "classifiers.knn.", knn_fields); }},
      {"tree", [&](const json& v) { apply(v, "classifiers.tree.", tree_fields); }},
      {"forest", [&](const json& v) { apply(v, "classifiers.forest.", forest_fields); }}};
  const std::map<std::string, Setter> path_fields = {
      {"traces_dir", field(c.paths.traces_dir, "traces_dir")},
      {"bundle", field(c.paths.bundle, "bundle")},
      {"program", field(c.paths.program, "program")},
      {"output_dir", field(c.paths.output_dir, "output_dir")}};
  const std::map<std::string, Setter> top = {
      {"runs_per_program", field(c.runs_per_program, "runs_per_program")},
      {"seed", field(c.seed, "seed")},
      {"jobs", field(c.jobs, "jobs")},
      {"alpha", field(c.kill.alpha, "alpha")},
      {"beta", field(c.kill.beta, "beta")},
      {"indicators", [&](const json& v) { apply(v, "indicators.", indicator_fields); }},
      {"classifiers", [&](const json& v) { apply(v, "classifiers.", classifier_fields); }},
      {"paths", [&](const json& v) { apply(v, "paths.", path_fields); }}};
  apply(root, "", top);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace tracediag::cli
