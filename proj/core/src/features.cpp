#include "tracediag/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tracediag/error.hpp"

namespace tracediag {
namespace {

// Neumaier-compensated sum; keeps mean() exact enough for the 1e-9 oracle
// tolerance on long sequences with mixed magnitudes.
double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double c = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    c += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

double finite_or_clamped(double v) {
  if (std::isnan(v)) return 0.0;
  constexpr double kMax = std::numeric_limits<double>::max();
  return std::clamp(v, -kMax, kMax);
}

}  // namespace

OperatorOctet aggregate(std::span<const double> seq) {
  std::vector<double> xs;
  xs.reserve(seq.size());
  for (double v : seq) {
    if (std::isfinite(v)) xs.push_back(v);
  }
  if (xs.empty()) xs.push_back(0.0);

  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  const double lo = xs.front();
  const double hi = xs.back();
  if (lo == hi) return {hi, lo, lo, lo, 0.0, 0.0, 0.0, 0.0};

  const double median = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  const double nd = static_cast<double>(n);
  const double mean = compensated_sum(xs) / nd;

  double ss = 0.0;
  double cube = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    ss += d * d;
    cube += d * d * d;
  }
  const double var = n > 1 ? ss / (nd - 1.0) : 0.0;
  const double sd = std::sqrt(var);
  const double m2 = ss / nd;
  const double m3 = cube / nd;
  const double skew = (n < 3 || m2 == 0.0) ? 0.0 : m3 / std::pow(m2, 1.5);
  const double sem = sd / std::sqrt(nd);

  OperatorOctet out = {hi, lo, median, mean, var, sd, skew, sem};
  for (double& v : out) v = finite_or_clamped(v);
  return out;
}

FeatureVector extract_features(const IndicatorMatrix& m) {
  FeatureVector out;
  out.reserve(kFeatureCount);
  for (const auto& seq : m.sequences) {
    const OperatorOctet o = aggregate(seq);
    out.insert(out.end(), o.begin(), o.end());
  }
  return out;
}

std::string feature_name(std::size_t index) {
  return "ft_" + std::string(kIndicatorNames.at(index / kOperatorCount)) + "_" +
         std::string(kOperatorNames[index % kOperatorCount]);
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (std::size_t i = 0; i < kFeatureCount; ++i) v.push_back(feature_name(i));
    return v;
  }();
  return names;
}

NormParams fit_normalizer(std::span<const FeatureVector> dataset) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "cannot fit normalizer on no rows");
  const std::size_t d = dataset.front().size();
  NormParams p;
  p.min.assign(d, std::numeric_limits<double>::infinity());
  p.max.assign(d, -std::numeric_limits<double>::infinity());
  for (const auto& row : dataset) {
    if (row.size() != d) {
      throw Error(ErrorKind::DimensionMismatch, "ragged feature rows: " +
                                                    std::to_string(row.size()) + " vs " +
                                                    std::to_string(d));
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (std::isnan(row[i])) continue;
      p.min[i] = std::min(p.min[i], row[i]);
      p.max[i] = std::max(p.max[i], row[i]);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (p.min[i] > p.max[i]) p.min[i] = p.max[i] = 0.0;  // all-NaN column
  }
  return p;
}

FeatureVector normalize(std::span<const double> x, const NormParams& p) {
  if (x.size() != p.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "normalize: expected " +
                                                  std::to_string(p.dimension()) + " values, got " +
                                                  std::to_string(x.size()));
  }
  FeatureVector out(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double range = p.max[i] - p.min[i];
    if (!(range > 0.0) || std::isnan(x[i])) continue;
    out[i] = std::clamp((x[i] - p.min[i]) / range, 0.0, 1.0);
  }
  return out;
}

}  // namespace tracediag
