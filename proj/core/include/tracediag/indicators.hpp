#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "tracediag/trace.hpp"

namespace tracediag {

inline constexpr std::size_t kIndicatorCount = 20;

/// Indicator rows in canonical order. Rows 0-3 are raw metric sequences,
/// rows 4-19 are per-interval 0/1 event streams.
enum class Indicator : std::size_t {
  Loss,
  Acc,
  LossVal,
  AccVal,
  NanLoss,
  NanAccuracy,
  NanWeight,
  NanGradient,
  LargeWeight,
  DecreaseAcc,
  IncreaseLoss,
  ConsMeanWeight,
  ConsStdWeight,
  GapTrainTest,
  TestTurnBad,
  SlowConverge,
  OscillatingLoss,
  DyingRelu,
  GradientVanish,
  GradientExplosion,
};

inline constexpr std::array<std::string_view, kIndicatorCount> kIndicatorNames = {
    "loss",           "acc",           "loss_val",         "acc_val",
    "nan_loss",       "nan_accuracy",  "nan_weight",       "nan_gradient",
    "large_weight",   "decrease_acc",  "increase_loss",    "cons_mean_weight",
    "cons_std_weight", "gap_train_test", "test_turn_bad",  "slow_converge",
    "oscillating_loss", "dying_relu",  "gradient_vanish",  "gradient_explosion",
};

/// Thresholds for the event indicators. Defaults are deliberately loose so
/// that they fire only on clearly pathological runs.
struct IndicatorConfig {
  double large_weight_threshold = 1e3;
  double const_tolerance = 1e-12;
  double gap_threshold = 0.1;
  int slow_converge_window = 5;
  double slow_converge_min_gain = 0.01;
  double slow_converge_acc_ceiling = 0.8;
  int oscillation_window = 5;
  int oscillation_min_flips = 3;
  double dying_relu_zero_fraction = 0.7;
  double dying_relu_acc_ceiling = 0.6;
  /// Number of trailing records averaged for the zero-gradient fraction.
  int dying_relu_window = 5;
  double vanish_threshold = 1e-7;
  double explode_threshold = 1e3;
  double problem_acc_ceiling = 0.6;

  /// Throws Error(InvalidParams) when a threshold is non-positive, a
  /// fraction lies outside (0,1] or a window is shorter than 2.
  void validate() const;
};

struct IndicatorMatrix {
  /// sequences[i][t] is indicator i at record t.
  std::array<std::vector<double>, kIndicatorCount> sequences;

  std::size_t length() const { return sequences[0].size(); }
  const std::vector<double>& operator[](Indicator i) const {
    return sequences[static_cast<std::size_t>(i)];
  }
};

/// Throws Error(TraceTooShort) when the trace has fewer than two records.
IndicatorMatrix compute_indicators(const RunTrace& trace, const IndicatorConfig& cfg = {});

/// One column per indicator, one row per record. NaN is written as "nan".
void write_indicator_csv(std::ostream& out, const IndicatorMatrix& m);

}  // namespace tracediag
