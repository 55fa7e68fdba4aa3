#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracediag/labels.hpp"
#include "tracediag/rng.hpp"
#include "tracediag/stats.hpp"

namespace tracediag {

inline constexpr std::array<std::string_view, 3> kClassificationLosses = {
    "categorical_crossentropy", "sparse_categorical_crossentropy", "binary_crossentropy"};
inline constexpr std::array<std::string_view, 3> kRegressionLosses = {
    "mean_absolute_error", "mean_absolute_percentage_error", "mean_squared_error"};
inline constexpr std::array<std::string_view, 9> kActivations = {
    "relu", "sigmoid", "softmax", "softplus", "softsign", "tanh", "selu", "elu", "linear"};
inline constexpr std::array<std::string_view, 5> kOptimizers = {"SGD", "RMSprop", "Adam",
                                                                "Adadelta", "Adagrad"};

inline constexpr double kLrDecreaseMin = 1e-16;
inline constexpr double kLrDecreaseMax = 1e-10;
inline constexpr double kLrIncreaseMin = 1.0;
inline constexpr double kLrIncreaseMax = 10.0;
inline constexpr int kEpochDivisorMin = 10;
inline constexpr int kEpochDivisorMax = 50;

struct LayerSpec {
  std::string kind;
  std::optional<int> units;
  std::optional<std::string> activation;
  std::optional<int> source_line;

  bool operator==(const LayerSpec&) const = default;
};

struct LossSpec {
  std::string name;
  std::optional<int> source_line;

  bool operator==(const LossSpec&) const = default;
};

struct OptimizerSpec {
  std::string name;
  std::optional<double> learning_rate;
  std::optional<int> source_line;
  std::optional<int> learning_rate_line;

  bool operator==(const OptimizerSpec&) const = default;
};

struct EpochSpec {
  int value = 1;
  std::optional<int> source_line;

  bool operator==(const EpochSpec&) const = default;
};

/// Declarative view of a training program's configurable surface.
struct ModelSpec {
  std::string id;
  std::vector<LayerSpec> layers;
  LossSpec loss;
  OptimizerSpec optimizer;
  EpochSpec epochs;
  std::optional<int> batch_size;

  bool operator==(const ModelSpec&) const = default;

  /// Throws Error(InvalidParams) when epochs < 1, learning rate <= 0 or the
  /// batch size is non-positive, and Error(UnknownLoss) for a loss outside
  /// the known vocabulary.
  void validate() const;
};

enum class LossCategory { Classification, Regression };

/// Throws Error(UnknownLoss) for names outside the six-loss vocabulary.
LossCategory categorize_loss(std::string_view name);
/// Maps Keras shorthand ("mse", "mae", "mape") onto the canonical names;
/// anything else is returned unchanged.
std::string canonical_loss_name(std::string_view name);
/// Case-insensitive match against kOptimizers; unknown names pass through.
std::string canonical_optimizer_name(std::string_view name);

/// The seven fault-seeding operators.
enum class MutationOperator {
  LossToClassification,
  LossToRegression,
  ChangeActivation,
  DecreaseEpochs,
  ChangeOptimizer,
  DecreaseLearningRate,
  IncreaseLearningRate,
};

std::string_view operator_name(MutationOperator op) noexcept;
std::optional<MutationOperator> parse_operator_name(std::string_view name) noexcept;
FaultType fault_type_of(MutationOperator op) noexcept;
/// Operators that can currently mutate `spec` for the given fault type. The
/// loss operator is always the one crossing into the other category.
std::vector<MutationOperator> applicable_operators(const ModelSpec& spec, FaultType type);

struct FaultRecord {
  FaultType fault_type = FaultType::Loss;
  MutationOperator op = MutationOperator::LossToClassification;
  std::string before;  // textual value, "default" when unset
  std::string after;
  std::optional<int> target_line;
};

struct Mutation {
  ModelSpec spec;
  FaultRecord record;
};

/// Applies one operator. Throws Error(NoMutableTarget) when the model offers
/// nothing to mutate (no activated layer, epochs already 1, loss already in
/// the target category) and Error(UnknownLoss) for loss operators on an
/// unknown loss.
Mutation apply_operator(const ModelSpec& spec, MutationOperator op, Rng& rng);

struct MutationPlan {
  std::string base_spec_id;
  std::vector<FaultRecord> records;
  std::uint64_t rng_seed = 0;
};

/// Seeds up to `max_types` distinct fault types in random order without any
/// kill check. Returns the final spec and the plan that produced it.
std::pair<ModelSpec, MutationPlan> random_plan(const ModelSpec& spec, std::size_t max_types,
                                               std::uint64_t seed);

/// Trains a spec `repetitions` times and returns the test accuracies.
using Evaluator = std::function<std::vector<double>(const ModelSpec&)>;

struct SeedingOptions {
  std::size_t max_types = 5;
  KillConfig kill;
  std::size_t repetitions = 20;  // 0 accepts any count >= 2
  int retries_per_type = 3;
};

struct StepVerdict {
  FaultRecord record;
  KillVerdict verdict;
};

struct LabeledMutant {
  ModelSpec spec;
  FaultLabelSet labels;
  /// Kill-confirmed steps along the chain, in application order.
  std::vector<StepVerdict> steps;
};

struct SeedingResult {
  std::vector<LabeledMutant> mutants;
  MutationPlan plan;  // kill-confirmed records only
  std::vector<StepVerdict> rejected;
  std::vector<double> baseline;
};

/// Stacks faults one type at a time, keeping a fault only when the mutant is
/// killed against the original program's accuracies. A rejected fault is
/// retried with a fresh draw up to `retries_per_type` times per type.
///
/// Throws Error(EvaluatorFailure) when the evaluator throws or returns a
/// sample count other than `repetitions` (at least two are always required),
/// and Error(ExhaustedOperators) when no fault type can be applied to the
/// base spec at all.
SeedingResult seed_iteratively(const ModelSpec& spec, const Evaluator& evaluator,
                               std::uint64_t seed, const SeedingOptions& options = {});

std::string spec_to_json(const ModelSpec& spec, int indent = 2);
ModelSpec spec_from_json(std::string_view text);
std::string plan_to_json(const MutationPlan& plan, int indent = 2);
std::string seeding_to_json(const SeedingResult& result, int indent = 2);
std::string verdict_to_json(const KillVerdict& v, int indent = 2);

}  // namespace tracediag
