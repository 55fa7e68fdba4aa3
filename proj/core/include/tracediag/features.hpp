#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tracediag/indicators.hpp"

namespace tracediag {

inline constexpr std::size_t kOperatorCount = 8;
inline constexpr std::size_t kFeatureCount = kIndicatorCount * kOperatorCount;  // 160

enum class StatOp : std::size_t { Max, Min, Median, Mean, Var, Std, Skew, Sem };

inline constexpr std::array<std::string_view, kOperatorCount> kOperatorNames = {
    "max", "min", "median", "mean", "var", "std", "skew", "sem"};

/// (max, min, median, mean, var, std, skew, sem)
using OperatorOctet = std::array<double, kOperatorCount>;

/// Diagnostic feature vector. Produced by extract_features() with exactly
/// kFeatureCount entries laid out as indicator * 8 + operator. Classifiers
/// accept any fixed dimension.
using FeatureVector = std::vector<double>;

/// Summarizes a sequence with the eight operators.
///
/// Non-finite entries are dropped first; an empty remainder is treated as the
/// singleton {0}. var/std/sem use the n-1 divisor (0 for n = 1). skew is the
/// Fisher-Pearson g1 = m3 / m2^1.5 over population moments, 0 when m2 = 0 or
/// n < 3. Even-length medians average the two middle order statistics.
OperatorOctet aggregate(std::span<const double> seq);

FeatureVector extract_features(const IndicatorMatrix& m);

constexpr std::size_t feature_index(Indicator ind, StatOp op) {
  return static_cast<std::size_t>(ind) * kOperatorCount + static_cast<std::size_t>(op);
}

/// "ft_<indicator>_<op>", e.g. ft_loss_max.
std::string feature_name(std::size_t index);
const std::vector<std::string>& feature_names();

/// Per-dimension min-max scaling parameters.
struct NormParams {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t dimension() const { return min.size(); }
};

/// Throws Error(EmptyDataset) on an empty dataset and
/// Error(DimensionMismatch) on ragged rows.
NormParams fit_normalizer(std::span<const FeatureVector> dataset);

/// Scales into [0,1]; out-of-range inputs are clamped and dimensions with
/// max == min map to 0.
FeatureVector normalize(std::span<const double> x, const NormParams& p);

}  // namespace tracediag
