#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tracediag/labels.hpp"
#include "tracediag/trace.hpp"

namespace tracediag::synthetic {

/// Parameterized trace generator with planted fault signatures:
///   lr        oscillating loss and very large weights
///   loss      loss magnitude inflated by two orders
///   optimizer weights frozen between records
///   act       accuracy plateau near chance, vanishing and mostly-zero gradients
///   epoch     a run cut after a few records while accuracy still climbs
struct GeneratorConfig {
  std::size_t layers = 3;
  int min_records = 20;
  int max_records = 30;
  int short_min_records = 3;  // runs carrying the epoch fault
  int short_max_records = 4;
  double fault_probability = 0.3;  // per fault type, for generate_corpus
  /// Record indices whose loss is forced to NaN (clamped to the trace length).
  std::vector<std::size_t> nan_loss_at;
};

RunTrace generate_trace(const FaultLabelSet& faults, std::uint64_t seed,
                        const GeneratorConfig& cfg = {});

struct SyntheticRun {
  RunTrace trace;
  FaultLabelSet labels;
};

/// Each fault type is drawn independently with cfg.fault_probability.
std::vector<SyntheticRun> generate_corpus(std::size_t count, std::uint64_t seed,
                                          const GeneratorConfig& cfg = {});

}  // namespace tracediag::synthetic
