#pragma once

#include <span>

namespace tracediag {

/// Returned by cohens_d() when the pooled deviation is zero but the means
/// differ. Signed like the mean difference.
inline constexpr double kEffectSizeSentinel = 1e9;

/// Kill-check thresholds: significance 0.2 and effect size 0.05 by default.
struct KillConfig {
  double alpha = 0.2;
  double beta = 0.05;
};

struct KillVerdict {
  bool killed = false;
  double effect_size = 0.0;
  double p_value = 1.0;
  bool mutant_worse = false;
};

double sample_mean(std::span<const double> xs);
/// Unbiased (n-1) variance; exactly 0 for constant input.
double sample_variance(std::span<const double> xs);

/// Standardized mean difference (mean(a) - mean(b)) / pooled sd.
/// Throws Error(TooFewSamples) unless both samples have n >= 2.
double cohens_d(std::span<const double> a, std::span<const double> b);

struct GlmFit {
  double intercept = 0.0;    // mean of group a
  double group_coef = 0.0;   // mean(b) - mean(a)
  double std_error = 0.0;    // Wald standard error of group_coef
  double statistic = 0.0;    // group_coef / std_error
  double dof = 0.0;          // n_a + n_b - 2
  double p_value = 1.0;      // two-sided
  bool degenerate = false;   // residual variance was zero
};

/// Gaussian-family, identity-link GLM of the pooled values on a 0/1 group
/// indicator (a -> 0, b -> 1), fitted by least squares. The two-sided Wald
/// p-value uses the Student-t reference with n_a + n_b - 2 degrees of freedom.
/// With zero residual variance p is 0 when the means differ and 1 otherwise.
/// Throws Error(TooFewSamples) when n_a + n_b < 3 or a group is empty.
GlmFit glm_group_fit(std::span<const double> a, std::span<const double> b);
double glm_p_value(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b).
double regularized_incomplete_beta(double x, double a, double b);
/// Two-sided tail probability P(|T| >= |t|) for Student-t with `dof`.
double student_t_two_sided(double t, double dof);

/// Mutant kill decision: effect size >= beta, p < alpha and the mutant's mean
/// accuracy is lower. Effect size is oriented so a worse mutant is positive.
KillVerdict is_kill(std::span<const double> original, std::span<const double> mutant,
                    const KillConfig& cfg = {});

}  // namespace tracediag
