#include "tracediag/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tracediag/error.hpp"

namespace tracediag {
namespace {

void require_samples(std::span<const double> xs, std::size_t min_n, const char* who) {
  if (xs.size() < min_n) {
    throw Error(ErrorKind::TooFewSamples, std::string(who) + ": need at least " +
                                              std::to_string(min_n) + " samples, got " +
                                              std::to_string(xs.size()));
  }
  for (double x : xs) {
    if (!std::isfinite(x)) throw Error(ErrorKind::InvalidParams, std::string(who) + ": non-finite sample");
  }
}

bool is_constant(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
}

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double sample_mean(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2 || is_constant(xs)) return 0.0;
  const double m = sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  require_samples(a, 2, "cohens_d");
  require_samples(b, 2, "cohens_d");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double diff = sample_mean(a) - sample_mean(b);
  const double pooled_var =
      ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0);
  if (pooled_var == 0.0) {
    if (diff == 0.0) return 0.0;
    return diff > 0 ? kEffectSizeSentinel : -kEffectSizeSentinel;
  }
  return diff / std::sqrt(pooled_var);
}

double regularized_incomplete_beta(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_two_sided(double t, double dof) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (t == 0.0) return 1.0;
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(dof / (dof + t * t), 0.5 * dof, 0.5);
}

GlmFit glm_group_fit(std::span<const double> a, std::span<const double> b) {
  require_samples(a, 1, "glm_p_value");
  require_samples(b, 1, "glm_p_value");
  const std::size_t n = a.size() + b.size();
  if (n < 3) {
    throw Error(ErrorKind::TooFewSamples, "glm_p_value: need n_a + n_b >= 3");
  }

  // Normal equations for y = b0 + b1 * g with g = 0 for a, 1 for b.
  const double nd = static_cast<double>(n);
  const double ng = static_cast<double>(b.size());
  double sum_y = 0.0;
  double sum_gy = 0.0;
  for (double y : a) sum_y += y;
  for (double y : b) {
    sum_y += y;
    sum_gy += y;
  }
  const double xtx00 = nd, xtx01 = ng, xtx11 = ng;
  const double det = xtx00 * xtx11 - xtx01 * xtx01;
  const double inv00 = xtx11 / det;
  const double inv01 = -xtx01 / det;
  const double inv11 = xtx00 / det;

  GlmFit fit;
  fit.intercept = inv00 * sum_y + inv01 * sum_gy;
  fit.group_coef = inv01 * sum_y + inv11 * sum_gy;
  fit.dof = nd - 2.0;

  if (is_constant(a) && is_constant(b)) {
    fit.degenerate = true;
    const bool equal = a.front() == b.front();
    fit.group_coef = equal ? 0.0 : b.front() - a.front();
    fit.p_value = equal ? 1.0 : 0.0;
    fit.statistic = equal ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(),
                                                fit.group_coef);
    return fit;
  }

  double rss = 0.0;
  for (double y : a) rss += (y - fit.intercept) * (y - fit.intercept);
  const double fitted_b = fit.intercept + fit.group_coef;
  for (double y : b) rss += (y - fitted_b) * (y - fitted_b);
  const double sigma2 = rss / fit.dof;

  fit.std_error = std::sqrt(sigma2 * inv11);
  fit.statistic = fit.group_coef / fit.std_error;
  fit.p_value = std::clamp(student_t_two_sided(fit.statistic, fit.dof), 0.0, 1.0);
  return fit;
}

double glm_p_value(std::span<const double> a, std::span<const double> b) {
  return glm_group_fit(a, b).p_value;
}

KillVerdict is_kill(std::span<const double> original, std::span<const double> mutant,
                    const KillConfig& cfg) {
  require_samples(original, 2, "is_kill");
  require_samples(mutant, 2, "is_kill");
  KillVerdict v;
  v.effect_size = cohens_d(original, mutant);
  v.p_value = glm_p_value(original, mutant);
  v.mutant_worse = sample_mean(mutant) < sample_mean(original);
  v.killed = v.effect_size >= cfg.beta && v.p_value < cfg.alpha && v.mutant_worse;
  return v;
}

}  // namespace tracediag
