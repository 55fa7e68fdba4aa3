#include "tracediag/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tracediag/error.hpp"
#include "tracediag/rng.hpp"

namespace tracediag::synthetic {
namespace {

struct LayerState {
  double mean = 0.0;
  double spread = 0.1;
  double large = 0.0;  // extra magnitude on the extremes for the lr signature
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

RunTrace generate_trace(const FaultLabelSet& faults, std::uint64_t seed,
                        const GeneratorConfig& cfg) {
  if (cfg.layers == 0 || cfg.min_records < 2 || cfg.max_records < cfg.min_records ||
      cfg.short_min_records < 2 || cfg.short_max_records < cfg.short_min_records) {
    throw Error(ErrorKind::InvalidParams, "invalid synthetic generator config");
  }
  Rng rng(seed);
  const bool lr = faults.contains(FaultType::Lr);
  const bool loss_fault = faults.contains(FaultType::Loss);
  const bool opt = faults.contains(FaultType::Optimizer);
  const bool act = faults.contains(FaultType::Act);
  const bool epoch = faults.contains(FaultType::Epoch);

  const int n = epoch ? static_cast<int>(rng.uniform_int(cfg.short_min_records, cfg.short_max_records))
                      : static_cast<int>(rng.uniform_int(cfg.min_records, cfg.max_records));

  // Accuracy and loss curves: level + (start - level) * exp(-t / tau).
  double acc_final = rng.uniform(0.88, 0.97);
  double acc_start = rng.uniform(0.55, 0.65);
  double tau = rng.uniform(0.8, 1.5);
  double loss_start = rng.uniform(0.6, 0.8);
  double loss_final = rng.uniform(0.05, 0.15);
  if (epoch) tau = rng.uniform(4.0, 8.0);
  if (act) {
    acc_final = rng.uniform(0.42, 0.55);
    acc_start = acc_final - rng.uniform(0.0, 0.02);
    loss_final = rng.uniform(0.66, 0.72);
    loss_start = loss_final + rng.uniform(0.0, 0.02);
  }
  const double loss_scale = loss_fault ? rng.log_uniform(50.0, 200.0) : 1.0;
  const double osc_amp = lr ? rng.uniform(0.3, 0.6) : 0.0;
  const double val_gap = rng.uniform(0.0, 0.03);

  RunTrace trace;
  trace.run_id = "synthetic-" + std::to_string(seed);
  trace.dataset_name = "synthetic";
  trace.interval_policy = "per-epoch";
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    trace.layer_names.push_back(l == 0 ? "dense" : "dense_" + std::to_string(l));
  }

  std::vector<LayerState> states(cfg.layers);
  for (auto& s : states) {
    s.mean = rng.normal(0.0, 0.05);
    s.spread = rng.uniform(0.05, 0.3);
  }
  if (lr) states[rng.index(cfg.layers)].large = rng.log_uniform(2e3, 1e4);
  const std::size_t vanishing_layer = rng.index(cfg.layers);

  for (int t = 0; t < n; ++t) {
    IntervalRecord r;
    r.step_index = static_cast<std::uint64_t>(t);
    r.epoch = static_cast<std::uint64_t>(t);
    const double decay = std::exp(-t / tau);
    r.accuracy = clamp01(acc_final - (acc_final - acc_start) * decay + rng.normal(0.0, 0.005));
    double loss = loss_final + (loss_start - loss_final) * decay;
    loss *= 1.0 + rng.normal(0.0, 0.01);
    if (lr) loss *= 1.0 + osc_amp * (t % 2 == 0 ? 1.0 : -1.0);
    r.loss = std::max(loss * loss_scale, 1e-6);
    r.val_loss = r.loss * (1.0 + rng.uniform(0.0, 0.05));
    r.val_accuracy = clamp01(r.accuracy - val_gap);

    for (std::size_t l = 0; l < cfg.layers; ++l) {
      LayerState& s = states[l];
      if (!opt && t > 0) {
        s.mean += rng.normal(0.0, 1e-3);
        s.spread = std::max(1e-3, s.spread + rng.normal(0.0, 1e-3));
      }
      LayerStats ls;
      ls.name = trace.layer_names[l];
      ls.weight_mean = s.mean;
      ls.weight_std = s.spread;
      ls.weight_min = s.mean - 3.0 * s.spread - s.large;
      ls.weight_max = s.mean + 3.0 * s.spread + s.large;

      double g_mean = rng.log_uniform(1e-3, 1e-2);
      double zero_frac = rng.uniform(0.0, 0.2);
      if (act) {
        zero_frac = rng.uniform(0.75, 0.95);
        if (l == vanishing_layer) g_mean = rng.log_uniform(1e-10, 1e-8);
      }
      ls.grad_mean_abs = g_mean;
      ls.grad_max_abs = g_mean * rng.uniform(5.0, 20.0);
      ls.grad_min_abs = act ? 0.0 : g_mean * rng.uniform(0.0, 0.05);
      ls.grad_zero_fraction = zero_frac;
      r.layers.push_back(std::move(ls));
    }
    trace.records.push_back(std::move(r));
  }

  for (std::size_t idx : cfg.nan_loss_at) {
    if (idx < trace.records.size()) {
      trace.records[idx].loss = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return trace;
}

std::vector<SyntheticRun> generate_corpus(std::size_t count, std::uint64_t seed,
                                          const GeneratorConfig& cfg) {
  std::vector<SyntheticRun> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng label_rng(derive_seed(seed, "labels" + std::to_string(i)));
    FaultLabelSet labels;
    for (FaultType t : kAllFaultTypes) {
      if (label_rng.uniform01() < cfg.fault_probability) labels.insert(t);
    }
    RunTrace trace = generate_trace(labels, derive_seed(seed, static_cast<std::uint64_t>(i)), cfg);
    trace.run_id = "synthetic-" + std::to_string(i);
    out.push_back({std::move(trace), labels});
  }
  return out;
}

}  // namespace tracediag::synthetic
