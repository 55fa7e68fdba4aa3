#include "tracediag/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "tracediag/error.hpp"

namespace tracediag {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Comparisons involving NaN are false, so every event built from these
// helpers is 0 whenever an operand is missing.
double flag(bool b) { return b ? 1.0 : 0.0; }

double layer_average(const std::vector<LayerStats>& layers, double LayerStats::*field) {
  if (layers.empty()) return kNaN;
  double sum = 0.0;
  for (const auto& l : layers) sum += l.*field;
  return sum / static_cast<double>(layers.size());
}

double max_abs_weight(const std::vector<LayerStats>& layers) {
  double best = kNaN;
  for (const auto& l : layers) {
    for (double v : {std::fabs(l.weight_min), std::fabs(l.weight_max)}) {
      if (!std::isnan(v) && (std::isnan(best) || v > best)) best = v;
    }
  }
  return best;
}

int count_sign_flips(const std::vector<double>& xs) {
  int flips = 0;
  int prev = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double d = xs[i] - xs[i - 1];
    const int s = (d > 0) - (d < 0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++flips;
    prev = s;
  }
  return flips;
}

void check(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::InvalidParams, std::string("IndicatorConfig: ") + what);
}

}  // namespace

void IndicatorConfig::validate() const {
  check(large_weight_threshold > 0, "large_weight_threshold must be > 0");
  check(const_tolerance > 0, "const_tolerance must be > 0");
  check(gap_threshold > 0, "gap_threshold must be > 0");
  check(slow_converge_min_gain > 0, "slow_converge_min_gain must be > 0");
  check(vanish_threshold > 0, "vanish_threshold must be > 0");
  check(explode_threshold > 0, "explode_threshold must be > 0");
  for (double f : {slow_converge_acc_ceiling, dying_relu_zero_fraction, dying_relu_acc_ceiling,
                   problem_acc_ceiling}) {
    check(f > 0 && f <= 1, "fractions and accuracy ceilings must lie in (0,1]");
  }
  check(slow_converge_window >= 2, "slow_converge_window must be >= 2");
  check(oscillation_window >= 2, "oscillation_window must be >= 2");
  check(dying_relu_window >= 2, "dying_relu_window must be >= 2");
  check(oscillation_min_flips >= 1, "oscillation_min_flips must be >= 1");
}

IndicatorMatrix compute_indicators(const RunTrace& trace, const IndicatorConfig& cfg) {
  cfg.validate();
  const std::size_t n = trace.records.size();
  if (n < 2) {
    throw Error(ErrorKind::TraceTooShort,
                "trace '" + trace.run_id + "' has " + std::to_string(n) + " record(s); need 2");
  }

  IndicatorMatrix m;
  for (auto& s : m.sequences) s.assign(n, 0.0);
  auto set = [&](Indicator i, std::size_t t, double v) {
    m.sequences[static_cast<std::size_t>(i)][t] = v;
  };

  std::vector<double> loss(n), acc(n), val_loss(n), val_acc(n), mean_w(n), std_w(n), zero_frac(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& r = trace.records[t];
    loss[t] = r.loss;
    acc[t] = r.accuracy;
    val_loss[t] = r.val_loss.value_or(kNaN);
    val_acc[t] = r.val_accuracy.value_or(kNaN);
    mean_w[t] = layer_average(r.layers, &LayerStats::weight_mean);
    std_w[t] = layer_average(r.layers, &LayerStats::weight_std);
    zero_frac[t] = layer_average(r.layers, &LayerStats::grad_zero_fraction);
  }

  const auto slow_w = static_cast<std::size_t>(cfg.slow_converge_window);
  const auto osc_w = static_cast<std::size_t>(cfg.oscillation_window);
  const auto relu_w = static_cast<std::size_t>(cfg.dying_relu_window);

  for (std::size_t t = 0; t < n; ++t) {
    const auto& layers = trace.records[t].layers;

    set(Indicator::Loss, t, loss[t]);
    set(Indicator::Acc, t, acc[t]);
    set(Indicator::LossVal, t, val_loss[t]);
    set(Indicator::AccVal, t, val_acc[t]);

    set(Indicator::NanLoss, t, flag(!std::isfinite(loss[t])));
    set(Indicator::NanAccuracy, t, flag(std::isnan(acc[t])));

    bool w_bad = false;
    bool g_bad = false;
    double min_grad_mean = kNaN;
    double max_grad = kNaN;
    for (const auto& l : layers) {
      w_bad = w_bad || l.weight_has_nan || l.weight_has_inf;
      g_bad = g_bad || l.grad_has_nan || l.grad_has_inf;
      if (!std::isnan(l.grad_mean_abs) && !(l.grad_mean_abs >= min_grad_mean)) {
        min_grad_mean = l.grad_mean_abs;
      }
      if (!std::isnan(l.grad_max_abs) && !(l.grad_max_abs <= max_grad)) {
        max_grad = l.grad_max_abs;
      }
    }
    set(Indicator::NanWeight, t, flag(w_bad));
    set(Indicator::NanGradient, t, flag(g_bad));
    set(Indicator::LargeWeight, t, flag(max_abs_weight(layers) > cfg.large_weight_threshold));

    if (t > 0) {
      set(Indicator::DecreaseAcc, t, flag(acc[t] < acc[t - 1]));
      set(Indicator::IncreaseLoss, t, flag(loss[t] > loss[t - 1]));
      set(Indicator::ConsMeanWeight, t,
          flag(std::fabs(mean_w[t] - mean_w[t - 1]) <= cfg.const_tolerance));
      set(Indicator::ConsStdWeight, t,
          flag(std::fabs(std_w[t] - std_w[t - 1]) <= cfg.const_tolerance));
      set(Indicator::TestTurnBad, t,
          flag(loss[t] < loss[t - 1] && val_loss[t] > val_loss[t - 1]));
    }
    set(Indicator::GapTrainTest, t, flag(acc[t] - val_acc[t] > cfg.gap_threshold));

    if (t + 1 >= slow_w) {
      const double gain = acc[t] - acc[t + 1 - slow_w];
      set(Indicator::SlowConverge, t,
          flag(gain < cfg.slow_converge_min_gain && acc[t] < cfg.slow_converge_acc_ceiling));
    }

    if (std::isfinite(loss[t])) {
      std::vector<double> recent;
      for (std::size_t i = t + 1; i-- > 0 && recent.size() < osc_w;) {
        if (std::isfinite(loss[i])) recent.push_back(loss[i]);
      }
      std::reverse(recent.begin(), recent.end());
      set(Indicator::OscillatingLoss, t,
          flag(count_sign_flips(recent) >= cfg.oscillation_min_flips));
    }

    double zf_sum = 0.0;
    std::size_t zf_n = 0;
    for (std::size_t i = t + 1 > relu_w ? t + 1 - relu_w : 0; i <= t; ++i) {
      if (!std::isnan(zero_frac[i])) {
        zf_sum += zero_frac[i];
        ++zf_n;
      }
    }
    const double zf_mean = zf_n ? zf_sum / static_cast<double>(zf_n) : kNaN;
    set(Indicator::DyingRelu, t,
        flag(zf_mean >= cfg.dying_relu_zero_fraction && acc[t] < cfg.dying_relu_acc_ceiling));

    const bool low_acc = acc[t] < cfg.problem_acc_ceiling;
    set(Indicator::GradientVanish, t, flag(min_grad_mean < cfg.vanish_threshold && low_acc));
    set(Indicator::GradientExplosion, t,
        flag((max_grad > cfg.explode_threshold || g_bad) && low_acc));
  }
  return m;
}

void write_indicator_csv(std::ostream& out, const IndicatorMatrix& m) {
  for (std::size_t i = 0; i < kIndicatorCount; ++i) {
    if (i) out << ',';
    out << kIndicatorNames[i];
  }
  out << '\n';
  char buf[32];
  for (std::size_t t = 0; t < m.length(); ++t) {
    for (std::size_t i = 0; i < kIndicatorCount; ++i) {
      if (i) out << ',';
      const double v = m.sequences[i][t];
      if (std::isnan(v)) {
        out << "nan";
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
      }
    }
    out << '\n';
  }
}

}  // namespace tracediag
