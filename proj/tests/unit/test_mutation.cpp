#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "json.hpp"
#include "tracediag/error.hpp"
#include "tracediag/mutation.hpp"

using namespace tracediag;

namespace {

ModelSpec base_spec() {
  ModelSpec s;
  s.id = "mlp";
  s.layers = {{"Dense", 64, "relu", 6}, {"Dense", 32, "tanh", 7}, {"Dense", 1, "sigmoid", 8}};
  s.loss = {"binary_crossentropy", 12};
  s.optimizer = {"Adam", 0.001, 10, 10};
  s.epochs = {200, 13};
  s.batch_size = 32;
  return s;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::Io;
}

// Accuracy model used as a fake trainer: every seeded fault costs accuracy
// except activation changes, which are harmless here.
std::vector<double> fake_accuracies(const ModelSpec& s, const ModelSpec& base) {
  double mean = 0.9;
  if (s.loss.name != base.loss.name) mean -= 0.3;
  if (s.optimizer.name != base.optimizer.name) mean -= 0.2;
  if (s.optimizer.learning_rate != base.optimizer.learning_rate) mean -= 0.2;
  if (s.epochs.value != base.epochs.value) mean -= 0.1;
  std::vector<double> out(20);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mean + 0.001 * static_cast<double>(i % 5);
  return out;
}

}  // namespace

TEST(Vocabulary, LossCategories) {
  for (auto n : kClassificationLosses) EXPECT_EQ(categorize_loss(n), LossCategory::Classification);
  for (auto n : kRegressionLosses) EXPECT_EQ(categorize_loss(n), LossCategory::Regression);
  EXPECT_EQ(categorize_loss("mse"), LossCategory::Regression);
  EXPECT_EQ(canonical_loss_name("MAE"), "mean_absolute_error");
  EXPECT_EQ(kind_of([] { categorize_loss("hinge"); }), ErrorKind::UnknownLoss);
  EXPECT_EQ(canonical_optimizer_name("adam"), "Adam");
  EXPECT_EQ(canonical_optimizer_name("Nadam"), "Nadam");
}

TEST(Vocabulary, OperatorNamesRoundTrip) {
  for (int i = 0; i < 7; ++i) {
    const auto op = static_cast<MutationOperator>(i);
    EXPECT_EQ(parse_operator_name(operator_name(op)), op);
  }
  EXPECT_FALSE(parse_operator_name("flip_bits").has_value());
  EXPECT_EQ(fault_type_of(MutationOperator::IncreaseLearningRate), FaultType::Lr);
}

TEST(Operators, DrawsStayInBounds) {
  const ModelSpec spec = base_spec();
  Rng rng(123);
  for (int i = 0; i < 10000; ++i) {
    const auto down = apply_operator(spec, MutationOperator::DecreaseLearningRate, rng);
    ASSERT_GE(*down.spec.optimizer.learning_rate, kLrDecreaseMin);
    ASSERT_LE(*down.spec.optimizer.learning_rate, kLrDecreaseMax);
    const auto up = apply_operator(spec, MutationOperator::IncreaseLearningRate, rng);
    ASSERT_GE(*up.spec.optimizer.learning_rate, kLrIncreaseMin);
    ASSERT_LE(*up.spec.optimizer.learning_rate, kLrIncreaseMax);
    const auto ep = apply_operator(spec, MutationOperator::DecreaseEpochs, rng);
    const int e = ep.spec.epochs.value;
    ASSERT_GE(e, 1);
    ASSERT_TRUE(e >= spec.epochs.value / kEpochDivisorMax && e <= spec.epochs.value / kEpochDivisorMin);
  }
}

TEST(Operators, SmallEpochCountsFloorAtOne) {
  ModelSpec spec = base_spec();
  spec.epochs.value = 7;
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(apply_operator(spec, MutationOperator::DecreaseEpochs, rng).spec.epochs.value, 1);
  }
  spec.epochs.value = 1;
  EXPECT_TRUE(applicable_operators(spec, FaultType::Epoch).empty());
  EXPECT_EQ(kind_of([&] { apply_operator(spec, MutationOperator::DecreaseEpochs, rng); }),
            ErrorKind::NoMutableTarget);
}

TEST(Operators, LossAlwaysCrossesCategory) {
  Rng rng(5);
  for (auto start : {"categorical_crossentropy", "mean_squared_error", "mse", "binary_crossentropy"}) {
    ModelSpec spec = base_spec();
    spec.loss.name = start;
    const auto ops = applicable_operators(spec, FaultType::Loss);
    ASSERT_EQ(ops.size(), 1u);
    for (int i = 0; i < 200; ++i) {
      const auto m = apply_operator(spec, ops[0], rng);
      ASSERT_NE(categorize_loss(m.spec.loss.name), categorize_loss(spec.loss.name));
      ASSERT_EQ(m.record.target_line, 12);
    }
  }
  ModelSpec spec = base_spec();
  EXPECT_EQ(kind_of([&] { apply_operator(spec, MutationOperator::LossToClassification, rng); }),
            ErrorKind::NoMutableTarget);
  spec.loss.name = "hinge";
  EXPECT_TRUE(applicable_operators(spec, FaultType::Loss).empty());
  EXPECT_EQ(kind_of([&] { apply_operator(spec, MutationOperator::LossToRegression, rng); }),
            ErrorKind::UnknownLoss);
}

TEST(Operators, ActivationAndOptimizerAlwaysChange) {
  const ModelSpec spec = base_spec();
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const auto a = apply_operator(spec, MutationOperator::ChangeActivation, rng);
    int changed = 0;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
      if (a.spec.layers[l].activation != spec.layers[l].activation) {
        ++changed;
        ASSERT_EQ(a.record.target_line, spec.layers[l].source_line);
        ASSERT_NE(std::find(kActivations.begin(), kActivations.end(), *a.spec.layers[l].activation),
                  kActivations.end());
      }
    }
    ASSERT_EQ(changed, 1);
    const auto o = apply_operator(spec, MutationOperator::ChangeOptimizer, rng);
    ASSERT_NE(o.spec.optimizer.name, "Adam");
    ASSERT_EQ(o.record.before, "Adam");
    ASSERT_EQ(o.record.after, o.spec.optimizer.name);
  }
  ModelSpec bare = base_spec();
  for (auto& l : bare.layers) l.activation.reset();
  EXPECT_TRUE(applicable_operators(bare, FaultType::Act).empty());
}

TEST(Operators, LearningRateRecordUsesDefaultWhenUnset) {
  ModelSpec spec = base_spec();
  spec.optimizer.learning_rate.reset();
  spec.optimizer.learning_rate_line.reset();
  Rng rng(7);
  const auto m = apply_operator(spec, MutationOperator::IncreaseLearningRate, rng);
  EXPECT_EQ(m.record.before, "default");
  EXPECT_EQ(m.record.target_line, 10);
}

TEST(Plans, NoFaultTypeRepeats) {
  const ModelSpec spec = base_spec();
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto [mutated, plan] = random_plan(spec, 5, seed);
    std::set<FaultType> seen;
    for (const auto& r : plan.records) ASSERT_TRUE(seen.insert(r.fault_type).second);
    ASSERT_EQ(plan.records.size(), 5u);
    const auto again = random_plan(spec, 5, seed);
    ASSERT_EQ(again.first, mutated);
  }
  EXPECT_EQ(random_plan(spec, 2, 9).second.records.size(), 2u);
}

TEST(Seeding, KeepsOnlyKilledFaults) {
  const ModelSpec spec = base_spec();
  int calls = 0;
  const Evaluator eval = [&](const ModelSpec& s) {
    ++calls;
    return fake_accuracies(s, spec);
  };
  int act_first = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto result = seed_iteratively(spec, eval, seed);
    ASSERT_EQ(result.baseline.size(), 20u);
    std::set<FaultType> types;
    for (const auto& r : result.plan.records) ASSERT_TRUE(types.insert(r.fault_type).second);
    ASSERT_EQ(result.mutants.size(), result.plan.records.size());
    for (std::size_t i = 0; i < result.mutants.size(); ++i) {
      const auto& m = result.mutants[i];
      ASSERT_EQ(m.steps.size(), i + 1);
      FaultLabelSet from_steps;
      for (const auto& st : m.steps) {
        ASSERT_TRUE(st.verdict.killed);
        from_steps.insert(st.record.fault_type);
      }
      ASSERT_EQ(m.labels, from_steps);
    }
    // The activation change costs nothing on its own, so it is only kept
    // when it lands on top of an already harmful mutant. Tried first, it is
    // rejected three times and dropped.
    const auto act_rejections = std::count_if(result.rejected.begin(), result.rejected.end(),
                                              [](const StepVerdict& v) { return v.record.fault_type == FaultType::Act; });
    if (types.count(FaultType::Act)) {
      ASSERT_NE(result.plan.records.front().fault_type, FaultType::Act);
      ASSERT_EQ(act_rejections, 0);
      ASSERT_EQ(types.size(), 5u);
    } else {
      ++act_first;
      ASSERT_EQ(act_rejections, 3);
      ASSERT_EQ(types.size(), 4u);
    }
  }
  EXPECT_GT(act_first, 0);
  EXPECT_GT(calls, 0);
}

TEST(Seeding, IdenticalSamplesKillNothing) {
  const auto result = seed_iteratively(base_spec(), [](const ModelSpec&) {
    std::vector<double> out(20);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.8 + 0.001 * static_cast<double>(i % 4);
    return out;
  }, 3);
  EXPECT_TRUE(result.mutants.empty());
  EXPECT_TRUE(result.plan.records.empty());
  EXPECT_EQ(result.rejected.size(), 15u);
}

TEST(Seeding, SingleTypeMutants) {
  const ModelSpec spec = base_spec();
  SeedingOptions opts;
  opts.max_types = 1;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto result = seed_iteratively(spec, [&](const ModelSpec& s) {
      std::vector<double> out = fake_accuracies(spec, spec);
      if (!(s == spec)) for (double& v : out) v -= 0.5;
      return out;
    }, seed, opts);
    ASSERT_EQ(result.mutants.size(), 1u);
    EXPECT_EQ(result.mutants[0].labels.size(), 1u);
  }
}

TEST(Seeding, RespectsMaxTypes) {
  const ModelSpec spec = base_spec();
  SeedingOptions opts;
  opts.max_types = 2;
  const auto result = seed_iteratively(spec, [&](const ModelSpec& s) { return fake_accuracies(s, spec); }, 4, opts);
  EXPECT_EQ(result.plan.records.size(), 2u);
}

TEST(Seeding, EvaluatorFailures) {
  const ModelSpec spec = base_spec();
  EXPECT_EQ(kind_of([&] {
              seed_iteratively(spec, [](const ModelSpec&) -> std::vector<double> {
                throw std::runtime_error("trainer crashed");
              }, 1);
            }),
            ErrorKind::EvaluatorFailure);
  EXPECT_EQ(kind_of([&] {
              seed_iteratively(spec, [](const ModelSpec&) { return std::vector<double>(19, 0.5); }, 1);
            }),
            ErrorKind::EvaluatorFailure);
  try {
    seed_iteratively(spec, [](const ModelSpec&) { return std::vector<double>{0.5}; }, 1);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("\"mlp\""), std::string::npos);  // failing spec attached
  }
}

TEST(Seeding, OptimizerAndLrKeepAnySpecMutable) {
  ModelSpec spec = base_spec();
  spec.epochs.value = 1;
  for (auto& l : spec.layers) l.activation.reset();
  spec.loss.name = "hinge";
  EXPECT_NO_THROW(seed_iteratively(spec, [&](const ModelSpec& s) { return fake_accuracies(s, spec); }, 1));
}

TEST(Json, SpecRoundTrip) {
  ModelSpec spec = base_spec();
  EXPECT_EQ(spec_from_json(spec_to_json(spec)), spec);
  spec.optimizer.learning_rate.reset();
  spec.batch_size.reset();
  spec.layers[1].activation.reset();
  spec.layers[1].units.reset();
  EXPECT_EQ(spec_from_json(spec_to_json(spec, -1)), spec);
  const auto j = nlohmann::json::parse(spec_to_json(spec));
  EXPECT_FALSE(j["optimizer"].contains("learning_rate"));
}

TEST(Json, SpecErrors) {
  EXPECT_EQ(kind_of([] { spec_from_json("{"); }), ErrorKind::InvalidParams);
  ModelSpec spec = base_spec();
  spec.epochs.value = 0;
  EXPECT_EQ(kind_of([&] { spec_from_json(spec_to_json(spec)); }), ErrorKind::InvalidParams);
  spec = base_spec();
  spec.loss.name = "hinge";
  EXPECT_EQ(kind_of([&] { spec_from_json(spec_to_json(spec)); }), ErrorKind::UnknownLoss);
}

TEST(Json, PlanAndSeedingOutput) {
  const ModelSpec spec = base_spec();
  const auto [mutated, plan] = random_plan(spec, 3, 8);
  const auto pj = nlohmann::json::parse(plan_to_json(plan));
  EXPECT_EQ(pj["base_spec_id"], "mlp");
  EXPECT_EQ(pj["records"].size(), 3u);
  const auto result = seed_iteratively(spec, [&](const ModelSpec& s) { return fake_accuracies(s, spec); }, 2);
  const auto sj = nlohmann::json::parse(seeding_to_json(result));
  EXPECT_EQ(sj["mutants"].size(), result.mutants.size());
  const auto vj = nlohmann::json::parse(verdict_to_json(result.mutants[0].steps[0].verdict));
  EXPECT_TRUE(vj["killed"].get<bool>());
}
