#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tracediag/classifiers.hpp"
#include "tracediag/features.hpp"
#include "tracediag/labels.hpp"

namespace tracediag {

struct FeatureRow {
  std::string run_id;
  FeatureVector features;
  FaultLabelSet labels;
};

/// Feature CSV: `run_id`, the 160 `ft_*` columns and, when labelled, the five
/// `label_<fault>` 0/1 columns.
struct FeatureTable {
  std::vector<FeatureRow> rows;
  bool has_labels = false;
};

void write_feature_csv(std::ostream& out, const FeatureTable& table);

/// Columns may appear in any order. Throws Error(SchemaMismatch) for a
/// missing or duplicated feature column or a partial set of label columns,
/// and Error(MalformedRecord) with the 1-based line for unparseable rows.
FeatureTable read_feature_csv(std::istream& in);
FeatureTable load_feature_csv(const std::filesystem::path& path);

/// Throws Error(SchemaMismatch) when the table carries no labels.
std::vector<LabeledSample> to_labeled_samples(const FeatureTable& table);

}  // namespace tracediag
