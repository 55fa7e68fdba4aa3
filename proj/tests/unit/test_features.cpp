#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "builders.hpp"
#include "oracles.hpp"
#include "tracediag/error.hpp"
#include "tracediag/features.hpp"
#include "tracediag/rng.hpp"

using namespace tracediag;

namespace {

void expect_close(double got, long double want, const char* what) {
  const long double tol = 1e-9L * std::max(1.0L, std::fabs(want));
  EXPECT_LE(std::fabs(static_cast<long double>(got) - want), tol) << what << " got " << got
                                                                  << " want " << static_cast<double>(want);
}

void expect_octet(const OperatorOctet& o, const oracle::Moments& m) {
  expect_close(o[0], m.max, "max");
  expect_close(o[1], m.min, "min");
  expect_close(o[2], m.median, "median");
  expect_close(o[3], m.mean, "mean");
  expect_close(o[4], m.var, "var");
  expect_close(o[5], m.std, "std");
  expect_close(o[6], m.skew, "skew");
  expect_close(o[7], m.sem, "sem");
}

}  // namespace

TEST(Aggregate, KnownValues) {
  const std::vector<double> xs = {1, 2, 3, 4};
  const auto o = aggregate(xs);
  EXPECT_DOUBLE_EQ(o[0], 4);
  EXPECT_DOUBLE_EQ(o[1], 1);
  EXPECT_DOUBLE_EQ(o[2], 2.5);
  EXPECT_DOUBLE_EQ(o[3], 2.5);
  EXPECT_DOUBLE_EQ(o[4], 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(o[6], 0.0);
  EXPECT_DOUBLE_EQ(o[7], std::sqrt(5.0 / 3.0) / 2.0);
}

TEST(Aggregate, DegenerateInputs) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> all_bad = {nan, inf, -inf};
  EXPECT_EQ(aggregate(all_bad), (OperatorOctet{0, 0, 0, 0, 0, 0, 0, 0}));
  const std::vector<double> single = {7.0};
  EXPECT_EQ(aggregate(single), (OperatorOctet{7, 7, 7, 7, 0, 0, 0, 0}));
  const std::vector<double> constant = {2, 2, 2, nan};
  EXPECT_EQ(aggregate(constant), (OperatorOctet{2, 2, 2, 2, 0, 0, 0, 0}));
}

TEST(Aggregate, MatchesOracleOnRandomInputs) {
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 200));
    const double scale = rng.log_uniform(1e-6, 1e6);
    std::vector<double> xs(n);
    for (auto& x : xs) {
      const double u = rng.uniform01();
      if (u < 0.05) {
        x = std::numeric_limits<double>::quiet_NaN();
      } else if (u < 0.08) {
        x = -std::numeric_limits<double>::infinity();
      } else if (u < 0.3) {
        x = static_cast<double>(rng.uniform_int(0, 1));
      } else {
        x = rng.normal(0.0, scale);
      }
    }
    SCOPED_TRACE(trial);
    expect_octet(aggregate(xs), oracle::moments(xs));
  }
}

TEST(Features, LayoutAndNames) {
  const auto& names = feature_names();
  ASSERT_EQ(names.size(), kFeatureCount);
  EXPECT_EQ(names[0], "ft_loss_max");
  EXPECT_EQ(names[7], "ft_loss_sem");
  EXPECT_EQ(names[feature_index(Indicator::GradientExplosion, StatOp::Sem)], "ft_gradient_explosion_sem");
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), kFeatureCount);
  for (const auto& n : names) EXPECT_EQ(n.rfind("ft_", 0), 0u);
}

TEST(Features, ExtractMatchesPerIndicatorOracle) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto m = compute_indicators(testing_support::random_trace(seed));
    const auto f = extract_features(m);
    ASSERT_EQ(f.size(), kFeatureCount);
    for (std::size_t i = 0; i < kIndicatorCount; ++i) {
      const auto want = oracle::moments(m.sequences[i]);
      OperatorOctet got;
      std::copy_n(f.begin() + static_cast<std::ptrdiff_t>(i * kOperatorCount), kOperatorCount, got.begin());
      SCOPED_TRACE(kIndicatorNames[i]);
      expect_octet(got, want);
    }
    for (double v : f) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(Features, ExtractionIsFast) {
  const auto tr = testing_support::random_trace(5);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 200; ++i) {
    const auto f = extract_features(compute_indicators(tr));
    ASSERT_EQ(f.size(), kFeatureCount);
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1.0);
}

TEST(Normalizer, ScalesClampsAndHandlesConstants) {
  const std::vector<FeatureVector> data = {{0, 5, 1}, {10, 5, 3}, {5, 5, 2}};
  const auto p = fit_normalizer(data);
  ASSERT_EQ(p.dimension(), 3u);
  EXPECT_EQ(normalize(data[2], p), (FeatureVector{0.5, 0.0, 0.5}));
  const std::vector<double> outside = {-5, 9, 100};
  EXPECT_EQ(normalize(outside, p), (FeatureVector{0.0, 0.0, 1.0}));
}

TEST(Normalizer, Errors) {
  EXPECT_THROW(fit_normalizer(std::vector<FeatureVector>{}), Error);
  try {
    fit_normalizer(std::vector<FeatureVector>{{1, 2}, {1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(Normalizer, OutputAlwaysInUnitInterval) {
  Rng rng(11);
  std::vector<FeatureVector> data(30, FeatureVector(6));
  for (auto& row : data)
    for (auto& v : row) v = rng.normal(0, 100);
  const auto p = fit_normalizer(data);
  for (int i = 0; i < 1000; ++i) {
    FeatureVector q(6);
    for (auto& v : q) v = rng.normal(0, 300);
    for (double v : normalize(q, p)) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
  }
}
