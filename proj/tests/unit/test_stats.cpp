#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "oracles.hpp"
#include "tracediag/error.hpp"
#include "tracediag/rng.hpp"
#include "tracediag/stats.hpp"

using namespace tracediag;

namespace {

std::vector<double> normal_sample(Rng& rng, std::size_t n, double mean, double sd) {
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.normal(mean, sd);
  return xs;
}

}  // namespace

TEST(Stats, MeanAndVariance) {
  const std::vector<double> xs = {2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(sample_mean(xs), 5.0);
  EXPECT_DOUBLE_EQ(sample_variance(xs), 32.0 / 7.0);
  const std::vector<double> c = {0.3, 0.3, 0.3};
  EXPECT_EQ(sample_variance(c), 0.0);
}

TEST(Stats, CohensDMatchesOracle) {
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const auto a = normal_sample(rng, static_cast<std::size_t>(rng.uniform_int(2, 40)),
                                 rng.uniform(0, 1), rng.log_uniform(1e-3, 1));
    const auto b = normal_sample(rng, static_cast<std::size_t>(rng.uniform_int(2, 40)),
                                 rng.uniform(0, 1), rng.log_uniform(1e-3, 1));
    const long double want = oracle::cohens_d(a, b);
    EXPECT_NEAR(cohens_d(a, b), static_cast<double>(want), 1e-9 * std::max(1.0L, std::fabs(want)));
  }
}

TEST(Stats, CohensDSentinelAndErrors) {
  const std::vector<double> a = {0.9, 0.9}, b = {0.5, 0.5}, one = {0.1};
  EXPECT_EQ(cohens_d(a, b), kEffectSizeSentinel);
  EXPECT_EQ(cohens_d(b, a), -kEffectSizeSentinel);
  EXPECT_EQ(cohens_d(a, a), 0.0);
  try {
    cohens_d(a, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewSamples);
  }
}

TEST(Stats, GlmPValueMatchesPooledTTest) {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto a = normal_sample(rng, static_cast<std::size_t>(rng.uniform_int(2, 30)), 0.8, 0.05);
    const auto b = normal_sample(rng, static_cast<std::size_t>(rng.uniform_int(2, 30)),
                                 0.8 - rng.uniform(0, 0.1), 0.05);
    EXPECT_NEAR(glm_p_value(a, b), oracle::pooled_t_p_value(a, b), 1e-6);
  }
}

TEST(Stats, GlmFitCoefficients) {
  const std::vector<double> a = {1, 2, 3}, b = {5, 6, 7};
  const auto fit = glm_group_fit(a, b);
  EXPECT_NEAR(fit.intercept, 2.0, 1e-12);
  EXPECT_NEAR(fit.group_coef, 4.0, 1e-12);
  EXPECT_NEAR(fit.std_error, std::sqrt(2.0 / 3.0), 1e-12);
  EXPECT_EQ(fit.dof, 4.0);
  EXPECT_FALSE(fit.degenerate);
}

TEST(Stats, GlmDegenerateAndErrors) {
  const std::vector<double> a = {0.5, 0.5}, b = {0.4, 0.4}, one = {0.1};
  EXPECT_EQ(glm_p_value(a, a), 1.0);
  EXPECT_EQ(glm_p_value(a, b), 0.0);
  EXPECT_TRUE(glm_group_fit(a, b).degenerate);
  EXPECT_NO_THROW(glm_p_value(a, one));
  EXPECT_THROW(glm_p_value(one, one), Error);
  EXPECT_THROW(glm_p_value(std::vector<double>{}, a), Error);
}

TEST(Stats, IncompleteBetaMatchesBoost) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double x = rng.uniform01();
    const double a = rng.log_uniform(0.05, 200);
    const double b = rng.log_uniform(0.05, 200);
    EXPECT_NEAR(regularized_incomplete_beta(x, a, b), boost::math::ibeta(a, b, x), 1e-10)
        << x << ' ' << a << ' ' << b;
  }
  EXPECT_EQ(regularized_incomplete_beta(0.0, 2, 3), 0.0);
  EXPECT_EQ(regularized_incomplete_beta(1.0, 2, 3), 1.0);
}

TEST(Stats, StudentTTails) {
  EXPECT_EQ(student_t_two_sided(0.0, 5), 1.0);
  EXPECT_EQ(student_t_two_sided(INFINITY, 5), 0.0);
  // t = 12.706 is the 0.975 quantile for one degree of freedom
  EXPECT_NEAR(student_t_two_sided(12.7062047361747, 1), 0.05, 1e-9);
  EXPECT_NEAR(student_t_two_sided(-2.0, 30), student_t_two_sided(2.0, 30), 1e-15);
}

TEST(KillCheck, IdenticalSamplesAreNotKilled) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto a = normal_sample(rng, 20, 0.8, 0.02);
    const auto v = is_kill(a, a);
    EXPECT_FALSE(v.killed);
    EXPECT_EQ(v.effect_size, 0.0);
  }
}

TEST(KillCheck, HalfPointGapIsKilled) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto a = normal_sample(rng, 20, 0.9, 0.02);
    const auto b = normal_sample(rng, 20, 0.4, 0.02);
    const auto v = is_kill(a, b);
    EXPECT_TRUE(v.killed);
    EXPECT_TRUE(v.mutant_worse);
    EXPECT_GT(v.effect_size, 0.0);
    EXPECT_LT(v.p_value, 0.2);
  }
}

TEST(KillCheck, BetterMutantIsNotKilled) {
  const std::vector<double> a = {0.4, 0.41, 0.39, 0.4}, b = {0.9, 0.91, 0.89, 0.9};
  const auto v = is_kill(a, b);
  EXPECT_FALSE(v.killed);
  EXPECT_FALSE(v.mutant_worse);
  EXPECT_LT(v.effect_size, 0.0);
}

TEST(KillCheck, VerdictIsConsistentWithComponents) {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 25));
    const auto a = normal_sample(rng, n, 0.8, rng.log_uniform(1e-3, 0.2));
    const auto b = normal_sample(rng, n, 0.8 - rng.uniform(-0.1, 0.2), rng.log_uniform(1e-3, 0.2));
    KillConfig cfg{rng.uniform(0.01, 0.5), rng.uniform(0.0, 1.0)};
    const auto v = is_kill(a, b, cfg);
    const bool expected = v.effect_size >= cfg.beta && v.p_value < cfg.alpha &&
                          sample_mean(b) < sample_mean(a);
    ASSERT_EQ(v.killed, expected);
    ASSERT_NEAR(v.effect_size, static_cast<double>(oracle::cohens_d(a, b)), 1e-9 * std::max(1.0, std::fabs(v.effect_size)));
    ASSERT_NEAR(v.p_value, oracle::pooled_t_p_value(a, b), 1e-6);
  }
}
