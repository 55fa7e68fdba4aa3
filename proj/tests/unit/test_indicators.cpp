#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "builders.hpp"
#include "tracediag/error.hpp"
#include "tracediag/indicators.hpp"
#include "tracediag/synthetic.hpp"

using namespace tracediag;
using testing_support::curve_trace;
using testing_support::random_trace;

TEST(Indicators, NamesFollowCanonicalOrder) {
  EXPECT_EQ(kIndicatorNames.front(), "loss");
  EXPECT_EQ(kIndicatorNames[static_cast<std::size_t>(Indicator::OscillatingLoss)], "oscillating_loss");
  EXPECT_EQ(kIndicatorNames.back(), "gradient_explosion");
}

TEST(Indicators, IncreaseLossCountsRises) {
  const auto m = compute_indicators(curve_trace({3, 2, 4, 5}, {0.5, 0.5, 0.5, 0.5}));
  EXPECT_EQ(m[Indicator::IncreaseLoss], (std::vector<double>{0, 0, 1, 1}));
  EXPECT_EQ(std::accumulate(m[Indicator::IncreaseLoss].begin(), m[Indicator::IncreaseLoss].end(), 0.0), 2.0);
}

TEST(Indicators, SlowConvergenceOnFlatAccuracy) {
  const auto m = compute_indicators(curve_trace(std::vector<double>(10, 1.0), std::vector<double>(10, 0.5)));
  for (std::size_t t = 0; t < 10; ++t) {
    EXPECT_EQ(m[Indicator::SlowConverge][t], t >= 4 ? 1.0 : 0.0) << t;
  }
}

TEST(Indicators, RawSequencesAndMissingValidation) {
  auto tr = curve_trace({1.0, 0.5}, {0.2, 0.4});
  tr.records[1].val_loss.reset();
  const auto m = compute_indicators(tr);
  EXPECT_EQ(m[Indicator::Loss], (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(m[Indicator::Acc], (std::vector<double>{0.2, 0.4}));
  EXPECT_TRUE(std::isnan(m[Indicator::LossVal][1]));
  EXPECT_EQ(m[Indicator::DecreaseAcc], (std::vector<double>{0, 0}));
}

TEST(Indicators, DecreaseAccuracyAndTestTurnBad) {
  auto tr = curve_trace({1.0, 0.8, 0.6}, {0.5, 0.6, 0.55});
  tr.records[2].val_loss = 2.0;
  const auto m = compute_indicators(tr);
  EXPECT_EQ(m[Indicator::DecreaseAcc], (std::vector<double>{0, 0, 1}));
  EXPECT_EQ(m[Indicator::TestTurnBad], (std::vector<double>{0, 0, 1}));
}

TEST(Indicators, WeightEvents) {
  auto tr = curve_trace({1, 1, 1}, {0.5, 0.5, 0.5});
  tr.records[1].layers = tr.records[0].layers;  // frozen between 0 and 1
  tr.records[2].layers[0].weight_mean = 0.5;  // the builder's two layers otherwise cancel
  tr.records[2].layers[0].weight_std = 0.3;
  tr.records[2].layers[1].weight_max = 5e3;
  tr.records[2].layers[0].weight_has_inf = true;
  tr.records[0].layers[1].grad_has_nan = true;
  const auto m = compute_indicators(tr);
  EXPECT_EQ(m[Indicator::ConsMeanWeight], (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(m[Indicator::ConsStdWeight], (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(m[Indicator::LargeWeight], (std::vector<double>{0, 0, 1}));
  EXPECT_EQ(m[Indicator::NanWeight], (std::vector<double>{0, 0, 1}));
  EXPECT_EQ(m[Indicator::NanGradient], (std::vector<double>{1, 0, 0}));
}

TEST(Indicators, GapOscillationAndGradientProblems) {
  std::vector<double> loss = {1, 2, 1, 2, 1, 2};
  auto tr = curve_trace(loss, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  for (auto& r : tr.records) {
    r.val_accuracy = 0.3;
    for (auto& l : r.layers) {
      l.grad_zero_fraction = 0.9;
      l.grad_mean_abs = 1e-9;
    }
  }
  tr.records[5].layers[0].grad_max_abs = 1e4;
  const auto m = compute_indicators(tr);
  EXPECT_EQ(m[Indicator::GapTrainTest], std::vector<double>(6, 1.0));
  // three sign flips need a window of five alternating losses
  EXPECT_EQ(m[Indicator::OscillatingLoss], (std::vector<double>{0, 0, 0, 0, 1, 1}));
  EXPECT_EQ(m[Indicator::DyingRelu], std::vector<double>(6, 1.0));
  EXPECT_EQ(m[Indicator::GradientVanish], std::vector<double>(6, 1.0));
  EXPECT_EQ(m[Indicator::GradientExplosion], (std::vector<double>{0, 0, 0, 0, 0, 1}));

  for (auto& r : tr.records) r.accuracy = 0.9;  // gates close above the ceiling
  const auto gated = compute_indicators(tr);
  EXPECT_EQ(gated[Indicator::DyingRelu], std::vector<double>(6, 0.0));
  EXPECT_EQ(gated[Indicator::GradientVanish], std::vector<double>(6, 0.0));
  EXPECT_EQ(gated[Indicator::GradientExplosion], std::vector<double>(6, 0.0));
}

TEST(Indicators, PlantedNanLossMatchesScan) {
  synthetic::GeneratorConfig cfg;
  cfg.nan_loss_at = {7};
  const auto tr = synthetic::generate_trace({}, 99, cfg);
  const auto m = compute_indicators(tr);
  ASSERT_EQ(m.length(), tr.records.size());
  for (std::size_t t = 0; t < tr.records.size(); ++t) {
    const double expected = !std::isfinite(tr.records[t].loss) ? 1.0 : 0.0;
    EXPECT_EQ(m[Indicator::NanLoss][t], expected) << t;
    EXPECT_EQ(m[Indicator::NanLoss][t], t == 7 ? 1.0 : 0.0) << t;
  }
}

TEST(Indicators, TooShortTrace) {
  try {
    compute_indicators(curve_trace({1.0}, {0.5}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TraceTooShort);
  }
}

TEST(Indicators, ConfigValidation) {
  IndicatorConfig cfg;
  cfg.oscillation_window = 1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.dying_relu_zero_fraction = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.vanish_threshold = 0;
  EXPECT_THROW(compute_indicators(curve_trace({1, 1}, {0.5, 0.5}), cfg), Error);
}

TEST(Indicators, CsvHasHeaderAndRows) {
  std::ostringstream out;
  write_indicator_csv(out, compute_indicators(curve_trace({1, 0.5, 0.25}, {0.1, 0.2, 0.3})));
  std::string header;
  std::istringstream in(out.str());
  std::getline(in, header);
  EXPECT_EQ(header.rfind("loss,acc,loss_val,", 0), 0u);
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 3);
}

// Properties over random traces.

TEST(IndicatorProperties, ShapeEventsAndFirstRecord) {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    const auto tr = random_trace(seed);
    const auto m = compute_indicators(tr);
    for (std::size_t i = 0; i < kIndicatorCount; ++i) {
      ASSERT_EQ(m.sequences[i].size(), tr.records.size());
      if (i < 4) continue;
      for (double v : m.sequences[i]) ASSERT_TRUE(v == 0.0 || v == 1.0) << kIndicatorNames[i];
    }
    for (Indicator ind : {Indicator::DecreaseAcc, Indicator::IncreaseLoss, Indicator::ConsMeanWeight,
                          Indicator::ConsStdWeight, Indicator::TestTurnBad}) {
      ASSERT_EQ(m[ind][0], 0.0);
    }
  }
}

TEST(IndicatorProperties, Deterministic) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto tr = random_trace(seed);
    const auto a = compute_indicators(tr);
    const auto b = compute_indicators(tr);
    for (std::size_t i = 0; i < kIndicatorCount; ++i) {
      for (std::size_t t = 0; t < a.length(); ++t) {
        const double x = a.sequences[i][t], y = b.sequences[i][t];
        ASSERT_TRUE(x == y || (std::isnan(x) && std::isnan(y)));
      }
    }
  }
}

TEST(IndicatorProperties, LargeWeightMonotoneInThreshold) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto tr = random_trace(seed);
    double previous = 1e300;
    for (double threshold : {1.0, 10.0, 1e2, 1e3, 5e3, 1e4, 1e6}) {
      IndicatorConfig cfg;
      cfg.large_weight_threshold = threshold;
      const auto seq = compute_indicators(tr, cfg)[Indicator::LargeWeight];
      const double events = std::accumulate(seq.begin(), seq.end(), 0.0);
      ASSERT_LE(events, previous);
      previous = events;
    }
  }
}
