#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "tracediag/classifiers.hpp"
#include "tracediag/indicators.hpp"
#include "tracediag/stats.hpp"

namespace tracediag::cli {

struct PipelineConfig {
  int runs_per_program = 10;
  IndicatorConfig indicators;
  ClassifierParams classifiers;
  KillConfig kill;
  std::uint64_t seed = 0;
  int jobs = 1;  // 0 = hardware concurrency

  struct Paths {
    std::string traces_dir;
    std::string bundle;
    std::string program;
    std::string output_dir;
  } paths;

  /// Throws Error(InvalidParams) on out-of-range values and Error(Io) when a
  /// configured input path does not exist.
  void validate() const;
};

/// JSON config. Unknown keys and wrong value types throw
/// Error(SchemaMismatch); missing keys keep their defaults.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace tracediag::cli
