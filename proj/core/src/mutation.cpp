#include "tracediag/mutation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "json.hpp"
#include "tracediag/error.hpp"

namespace tracediag {
namespace {

using json = nlohmann::ordered_json;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_lr(const std::optional<double>& lr) {
  return lr ? format_real(*lr) : std::string("default");
}

template <std::size_t N>
std::string pick_other(const std::array<std::string_view, N>& pool, std::string_view current,
                       bool case_insensitive, Rng& rng) {
  std::vector<std::string_view> candidates;
  const std::string cur = case_insensitive ? lower(current) : std::string(current);
  for (auto name : pool) {
    if ((case_insensitive ? lower(name) : std::string(name)) != cur) candidates.push_back(name);
  }
  return std::string(candidates[rng.index(candidates.size())]);
}

[[noreturn]] void no_target(const std::string& why) {
  throw Error(ErrorKind::NoMutableTarget, why);
}

json optional_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

std::optional<int> read_optional_int(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return it->get<int>();
}

json record_to_json(const FaultRecord& r) {
  return {{"fault_type", std::string(fault_name(r.fault_type))},
          {"operator", std::string(operator_name(r.op))},
          {"before", r.before},
          {"after", r.after},
          {"target_line", optional_int(r.target_line)}};
}

json verdict_json(const KillVerdict& v) {
  return {{"killed", v.killed},
          {"effect_size", v.effect_size},
          {"p_value", v.p_value},
          {"mutant_worse", v.mutant_worse}};
}

json steps_json(const std::vector<StepVerdict>& steps) {
  json arr = json::array();
  for (const auto& s : steps) {
    arr.push_back({{"record", record_to_json(s.record)}, {"verdict", verdict_json(s.verdict)}});
  }
  return arr;
}

json spec_json(const ModelSpec& spec) {
  json layers = json::array();
  for (const auto& l : spec.layers) {
    json j = {{"kind", l.kind}};
    if (l.units) j["units"] = *l.units;
    if (l.activation) j["activation"] = *l.activation;
    if (l.source_line) j["source_line"] = *l.source_line;
    layers.push_back(std::move(j));
  }
  json loss = {{"name", spec.loss.name}};
  if (spec.loss.source_line) loss["source_line"] = *spec.loss.source_line;
  json opt = {{"name", spec.optimizer.name}};
  if (spec.optimizer.learning_rate) opt["learning_rate"] = *spec.optimizer.learning_rate;
  if (spec.optimizer.source_line) opt["source_line"] = *spec.optimizer.source_line;
  if (spec.optimizer.learning_rate_line) {
    opt["learning_rate_line"] = *spec.optimizer.learning_rate_line;
  }
  json epochs = {{"value", spec.epochs.value}};
  if (spec.epochs.source_line) epochs["source_line"] = *spec.epochs.source_line;

  json j = {{"id", spec.id}, {"layers", layers}, {"loss", loss}, {"optimizer", opt}, {"epochs", epochs}};
  if (spec.batch_size) j["batch_size"] = *spec.batch_size;
  return j;
}

}  // namespace

void ModelSpec::validate() const {
  if (epochs.value < 1) throw Error(ErrorKind::InvalidParams, "epochs must be >= 1");
  if (optimizer.learning_rate && !(*optimizer.learning_rate > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "learning rate must be > 0");
  }
  if (batch_size && *batch_size < 1) throw Error(ErrorKind::InvalidParams, "batch_size must be >= 1");
  for (const auto& l : layers) {
    if (l.units && *l.units < 1) throw Error(ErrorKind::InvalidParams, "layer units must be >= 1");
  }
  categorize_loss(loss.name);
}

LossCategory categorize_loss(std::string_view name) {
  const std::string canon = canonical_loss_name(name);
  for (auto n : kClassificationLosses) {
    if (n == canon) return LossCategory::Classification;
  }
  for (auto n : kRegressionLosses) {
    if (n == canon) return LossCategory::Regression;
  }
  throw Error(ErrorKind::UnknownLoss, "unknown loss '" + std::string(name) + "'");
}

std::string canonical_loss_name(std::string_view name) {
  const std::string l = lower(name);
  if (l == "mse") return "mean_squared_error";
  if (l == "mae") return "mean_absolute_error";
  if (l == "mape") return "mean_absolute_percentage_error";
  return std::string(name);
}

std::string canonical_optimizer_name(std::string_view name) {
  const std::string l = lower(name);
  for (auto n : kOptimizers) {
    if (lower(n) == l) return std::string(n);
  }
  return std::string(name);
}

std::string_view operator_name(MutationOperator op) noexcept {
  switch (op) {
    case MutationOperator::LossToClassification: return "loss_to_classification";
    case MutationOperator::LossToRegression: return "loss_to_regression";
    case MutationOperator::ChangeActivation: return "change_activation";
    case MutationOperator::DecreaseEpochs: return "decrease_epochs";
    case MutationOperator::ChangeOptimizer: return "change_optimizer";
    case MutationOperator::DecreaseLearningRate: return "decrease_learning_rate";
    case MutationOperator::IncreaseLearningRate: return "increase_learning_rate";
  }
  return "?";
}

std::optional<MutationOperator> parse_operator_name(std::string_view name) noexcept {
  for (int i = 0; i <= static_cast<int>(MutationOperator::IncreaseLearningRate); ++i) {
    const auto op = static_cast<MutationOperator>(i);
    if (operator_name(op) == name) return op;
  }
  return std::nullopt;
}

FaultType fault_type_of(MutationOperator op) noexcept {
  switch (op) {
    case MutationOperator::LossToClassification:
    case MutationOperator::LossToRegression: return FaultType::Loss;
    case MutationOperator::ChangeActivation: return FaultType::Act;
    case MutationOperator::DecreaseEpochs: return FaultType::Epoch;
    case MutationOperator::ChangeOptimizer: return FaultType::Optimizer;
    case MutationOperator::DecreaseLearningRate:
    case MutationOperator::IncreaseLearningRate: return FaultType::Lr;
  }
  return FaultType::Loss;
}

std::vector<MutationOperator> applicable_operators(const ModelSpec& spec, FaultType type) {
  switch (type) {
    case FaultType::Loss:
      try {
        return {categorize_loss(spec.loss.name) == LossCategory::Classification
                    ? MutationOperator::LossToRegression
                    : MutationOperator::LossToClassification};
      } catch (const Error&) {
        return {};
      }
    case FaultType::Optimizer: return {MutationOperator::ChangeOptimizer};
    case FaultType::Lr:
      return {MutationOperator::DecreaseLearningRate, MutationOperator::IncreaseLearningRate};
    case FaultType::Epoch:
      if (spec.epochs.value > 1) return {MutationOperator::DecreaseEpochs};
      return {};
    case FaultType::Act:
      for (const auto& l : spec.layers) {
        if (l.activation) return {MutationOperator::ChangeActivation};
      }
      return {};
  }
  return {};
}

Mutation apply_operator(const ModelSpec& spec, MutationOperator op, Rng& rng) {
  Mutation m{spec, {}};
  FaultRecord& rec = m.record;
  rec.fault_type = fault_type_of(op);
  rec.op = op;

  switch (op) {
    case MutationOperator::LossToClassification:
    case MutationOperator::LossToRegression: {
      const LossCategory current = categorize_loss(spec.loss.name);
      const bool to_cls = op == MutationOperator::LossToClassification;
      if ((current == LossCategory::Classification) == to_cls) {
        no_target("loss '" + spec.loss.name + "' is already in the target category");
      }
      const auto& pool = to_cls ? kClassificationLosses : kRegressionLosses;
      m.spec.loss.name = std::string(pool[rng.index(pool.size())]);
      rec.before = spec.loss.name;
      rec.after = m.spec.loss.name;
      rec.target_line = spec.loss.source_line;
      break;
    }
    case MutationOperator::ChangeActivation: {
      std::vector<std::size_t> activated;
      for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (spec.layers[i].activation) activated.push_back(i);
      }
      if (activated.empty()) no_target("no layer carries an activation");
      LayerSpec& layer = m.spec.layers[activated[rng.index(activated.size())]];
      rec.before = *layer.activation;
      layer.activation = pick_other(kActivations, *layer.activation, true, rng);
      rec.after = *layer.activation;
      rec.target_line = layer.source_line;
      break;
    }
    case MutationOperator::DecreaseEpochs: {
      const int e = spec.epochs.value;
      if (e <= 1) no_target("epochs already at 1");
      const auto divisor = static_cast<int>(rng.uniform_int(kEpochDivisorMin, kEpochDivisorMax));
      m.spec.epochs.value = std::max(1, e / divisor);
      rec.before = std::to_string(e);
      rec.after = std::to_string(m.spec.epochs.value);
      rec.target_line = spec.epochs.source_line;
      break;
    }
    case MutationOperator::ChangeOptimizer: {
      m.spec.optimizer.name = pick_other(kOptimizers, spec.optimizer.name, true, rng);
      rec.before = spec.optimizer.name;
      rec.after = m.spec.optimizer.name;
      rec.target_line = spec.optimizer.source_line;
      break;
    }
    case MutationOperator::DecreaseLearningRate:
    case MutationOperator::IncreaseLearningRate: {
      const bool down = op == MutationOperator::DecreaseLearningRate;
      const double lo = down ? kLrDecreaseMin : kLrIncreaseMin;
      const double hi = down ? kLrDecreaseMax : kLrIncreaseMax;
      double lr = rng.log_uniform(lo, hi);
      while (spec.optimizer.learning_rate && lr == *spec.optimizer.learning_rate) {
        lr = rng.log_uniform(lo, hi);
      }
      m.spec.optimizer.learning_rate = lr;
      rec.before = format_lr(spec.optimizer.learning_rate);
      rec.after = format_lr(lr);
      rec.target_line = spec.optimizer.learning_rate_line ? spec.optimizer.learning_rate_line
                                                          : spec.optimizer.source_line;
      break;
    }
  }
  return m;
}

std::pair<ModelSpec, MutationPlan> random_plan(const ModelSpec& spec, std::size_t max_types,
                                               std::uint64_t seed) {
  Rng rng(seed);
  MutationPlan plan{spec.id, {}, seed};
  ModelSpec current = spec;
  std::array<FaultType, kFaultTypeCount> order = kAllFaultTypes;
  rng.shuffle(order.begin(), order.end());
  for (FaultType t : order) {
    if (plan.records.size() >= max_types) break;
    const auto ops = applicable_operators(current, t);
    if (ops.empty()) continue;
    Mutation m = apply_operator(current, ops[rng.index(ops.size())], rng);
    current = std::move(m.spec);
    plan.records.push_back(std::move(m.record));
  }
  return {current, plan};
}

SeedingResult seed_iteratively(const ModelSpec& spec, const Evaluator& evaluator,
                               std::uint64_t seed, const SeedingOptions& options) {
  auto evaluate = [&](const ModelSpec& s) {
    std::vector<double> samples;
    try {
      samples = evaluator(s);
    } catch (const std::exception& e) {
      throw Error(ErrorKind::EvaluatorFailure,
                  std::string("evaluator failed: ") + e.what() + "\nspec: " + spec_to_json(s, -1));
    }
    const bool count_ok = options.repetitions ? samples.size() == options.repetitions
                                              : samples.size() >= 2;
    if (!count_ok || samples.size() < 2) {
      throw Error(ErrorKind::EvaluatorFailure,
                  "evaluator returned " + std::to_string(samples.size()) +
                      " samples\nspec: " + spec_to_json(s, -1));
    }
    return samples;
  };

  bool any_applicable = false;
  for (FaultType t : kAllFaultTypes) any_applicable = any_applicable || !applicable_operators(spec, t).empty();
  if (!any_applicable) {
    throw Error(ErrorKind::ExhaustedOperators, "no mutation operator applies to spec '" + spec.id + "'");
  }

  Rng rng(seed);
  SeedingResult result;
  result.plan = {spec.id, {}, seed};
  result.baseline = evaluate(spec);

  std::array<FaultType, kFaultTypeCount> order = kAllFaultTypes;
  rng.shuffle(order.begin(), order.end());

  ModelSpec current = spec;
  FaultLabelSet confirmed;
  std::vector<StepVerdict> chain;
  const std::size_t max_types = std::min(options.max_types, kFaultTypeCount);

  for (FaultType t : order) {
    if (confirmed.size() >= max_types) break;
    for (int attempt = 0; attempt < options.retries_per_type; ++attempt) {
      const auto ops = applicable_operators(current, t);
      if (ops.empty()) break;
      Mutation m = apply_operator(current, ops[rng.index(ops.size())], rng);
      const std::vector<double> samples = evaluate(m.spec);
      StepVerdict step{m.record, is_kill(result.baseline, samples, options.kill)};
      if (!step.verdict.killed) {
        result.rejected.push_back(std::move(step));
        continue;
      }
      current = std::move(m.spec);
      confirmed.insert(t);
      result.plan.records.push_back(step.record);
      chain.push_back(std::move(step));
      result.mutants.push_back({current, confirmed, chain});
      break;
    }
  }
  return result;
}

std::string spec_to_json(const ModelSpec& spec, int indent) { return spec_json(spec).dump(indent); }

ModelSpec spec_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ModelSpec s;
    s.id = j.value("id", std::string());
    for (const auto& l : j.at("layers")) {
      LayerSpec layer;
      layer.kind = l.at("kind").get<std::string>();
      layer.units = read_optional_int(l, "units");
      if (auto it = l.find("activation"); it != l.end() && !it->is_null()) {
        layer.activation = it->get<std::string>();
      }
      layer.source_line = read_optional_int(l, "source_line");
      s.layers.push_back(std::move(layer));
    }
    const json& loss = j.at("loss");
    s.loss.name = loss.at("name").get<std::string>();
    s.loss.source_line = read_optional_int(loss, "source_line");
    const json& opt = j.at("optimizer");
    s.optimizer.name = opt.at("name").get<std::string>();
    if (auto it = opt.find("learning_rate"); it != opt.end() && !it->is_null()) {
      s.optimizer.learning_rate = it->get<double>();
    }
    s.optimizer.source_line = read_optional_int(opt, "source_line");
    s.optimizer.learning_rate_line = read_optional_int(opt, "learning_rate_line");
    const json& epochs = j.at("epochs");
    s.epochs.value = epochs.at("value").get<int>();
    s.epochs.source_line = read_optional_int(epochs, "source_line");
    s.batch_size = read_optional_int(j, "batch_size");
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidParams, std::string("malformed model spec: ") + e.what());
  }
}

std::string plan_to_json(const MutationPlan& plan, int indent) {
  json records = json::array();
  for (const auto& r : plan.records) records.push_back(record_to_json(r));
  json j = {{"base_spec_id", plan.base_spec_id}, {"rng_seed", plan.rng_seed}, {"records", records}};
  return j.dump(indent);
}

std::string seeding_to_json(const SeedingResult& result, int indent) {
  json mutants = json::array();
  for (const auto& m : result.mutants) {
    json labels = json::array();
    for (FaultType t : m.labels.types()) labels.push_back(std::string(fault_name(t)));
    mutants.push_back({{"labels", labels}, {"spec", spec_json(m.spec)}, {"steps", steps_json(m.steps)}});
  }
  json j = {{"baseline", result.baseline},
            {"plan", json::parse(plan_to_json(result.plan))},
            {"mutants", mutants},
            {"rejected", steps_json(result.rejected)}};
  return j.dump(indent);
}

std::string verdict_to_json(const KillVerdict& v, int indent) { return verdict_json(v).dump(indent); }

}  // namespace tracediag
