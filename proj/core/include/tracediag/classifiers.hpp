#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tracediag/features.hpp"
#include "tracediag/labels.hpp"

namespace tracediag {

struct LabeledSample {
  FeatureVector features;
  FaultLabelSet labels;
  std::string origin_id;
};

struct KnnParams {
  int k = 5;
};

struct TreeParams {
  int max_depth = 10;
  int min_samples_split = 2;
};

struct ForestParams {
  int trees = 50;
  TreeParams tree;
  /// Candidate features per split; 0 means floor(sqrt(dimension)).
  std::size_t max_features = 0;
};

struct ClassifierParams {
  KnnParams knn;
  TreeParams tree;
  ForestParams forest;

  /// Throws Error(InvalidParams) for k < 1, trees < 1, depth < 1 or
  /// min_samples_split < 2.
  void validate() const;
};

enum class Algorithm { Knn, Tree, Forest };

/// Multi-label k-nearest-neighbours (binary relevance over a shared
/// neighbourhood). A label is predicted when strictly more than half of the
/// k nearest points carry it; distance ties go to the lower training index.
class KnnModel {
 public:
  KnnModel() = default;
  static KnnModel fit(std::span<const LabeledSample> data, const KnnParams& params);

  FaultLabelSet predict(std::span<const double> x) const;
  /// Training indices of the k nearest points, nearest first.
  std::vector<std::size_t> neighbours(std::span<const double> x) const;

  bool fitted() const { return !points_.empty(); }
  int k() const { return k_; }
  std::size_t dimension() const { return points_.empty() ? 0 : points_.front().size(); }
  const std::vector<FeatureVector>& points() const { return points_; }
  const std::vector<FaultLabelSet>& labels() const { return labels_; }

  static KnnModel from_parts(int k, std::vector<FeatureVector> points,
                             std::vector<FaultLabelSet> labels);

 private:
  int k_ = 0;
  std::vector<FeatureVector> points_;
  std::vector<FaultLabelSet> labels_;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;     // taken when x[feature] <= threshold
  int right = -1;
  double leaf_value = 0.0;  // fraction of positive training rows reaching the node

  bool is_leaf() const { return feature < 0; }
};

/// Binary CART classifier with Gini impurity.
///
/// Thresholds are midpoints between consecutive distinct values. Among equal
/// impurities the lowest feature index, then the lowest threshold, wins.
/// With a feature sampler (random forests) features are visited in a random
/// order and the search stops after `max_features` non-constant candidates.
class BinaryTree {
 public:
  BinaryTree() = default;

  static BinaryTree fit(const std::vector<FeatureVector>& x, const std::vector<std::uint8_t>& y,
                        std::span<const std::size_t> rows, const TreeParams& params);
  static BinaryTree fit_randomized(const std::vector<FeatureVector>& x,
                                   const std::vector<std::uint8_t>& y,
                                   std::span<const std::size_t> rows, const TreeParams& params,
                                   std::size_t max_features, std::uint64_t seed);

  double score(std::span<const double> x) const;
  bool predict(std::span<const double> x) const { return score(x) >= 0.5; }

  bool fitted() const { return !nodes_.empty(); }
  std::size_t depth() const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  static BinaryTree from_nodes(std::vector<TreeNode> nodes);

 private:
  std::vector<TreeNode> nodes_;
};

class DecisionTreeModel {
 public:
  static DecisionTreeModel fit(std::span<const LabeledSample> data, const TreeParams& params);
  FaultLabelSet predict(std::span<const double> x) const;
  bool fitted() const { return per_label_[0].fitted(); }

  const BinaryTree& tree(FaultType t) const { return per_label_[static_cast<std::size_t>(t)]; }
  BinaryTree& tree(FaultType t) { return per_label_[static_cast<std::size_t>(t)]; }

 private:
  std::array<BinaryTree, kFaultTypeCount> per_label_;
};

/// Per-label bagged CART ensemble. Every tree owns a seed derived from the
/// model seed, so the fit is independent of training order and threading.
/// Majority vote, ties count as positive.
class RandomForestModel {
 public:
  struct Member {
    std::uint64_t seed = 0;
    BinaryTree tree;
  };

  static RandomForestModel fit(std::span<const LabeledSample> data, const ForestParams& params,
                               std::uint64_t seed);
  FaultLabelSet predict(std::span<const double> x) const;
  bool fitted() const { return !members_[0].empty(); }

  std::size_t max_features() const { return max_features_; }
  const std::vector<Member>& members(FaultType t) const {
    return members_[static_cast<std::size_t>(t)];
  }

  static RandomForestModel from_parts(std::size_t max_features,
                                      std::array<std::vector<Member>, kFaultTypeCount> members);

 private:
  std::size_t max_features_ = 0;
  std::array<std::vector<Member>, kFaultTypeCount> members_;
};

struct BundleMetadata {
  int version = 1;
  std::string trained_at;  // free-form; empty keeps bundles byte-reproducible
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  ClassifierParams params;
};

/// The three trained diagnosers plus the shared normalizer. All sub-models
/// see normalized features.
struct DiagnoserBundle {
  NormParams norm;
  KnnModel knn;
  DecisionTreeModel tree;
  RandomForestModel forest;
  BundleMetadata meta;

  std::size_t dimension() const { return norm.dimension(); }
};

/// Throws Error(EmptyDataset) when fewer than two samples are given or the
/// corpus has no positive or no negative label anywhere.
DiagnoserBundle train_diagnosers(std::span<const LabeledSample> data,
                                 const ClassifierParams& params, std::uint64_t seed,
                                 std::string trained_at = {});

struct ModelPredictions {
  FaultLabelSet knn;
  FaultLabelSet tree;
  FaultLabelSet forest;

  FaultLabelSet united() const { return knn | tree | forest; }
};

struct DiagnosisReport {
  std::vector<ModelPredictions> runs;
  FaultLabelSet final_labels;
  /// votes[label] = number of (run, model) pairs predicting the label.
  std::array<int, kFaultTypeCount> votes{};
};

/// Predicts each run with all three models and unions everything.
/// Throws Error(EmptyDataset) for no runs, Error(DimensionMismatch) for a
/// run of the wrong length and Error(ModelNotFitted) for an empty bundle.
DiagnosisReport diagnose(const DiagnoserBundle& bundle, std::span<const FeatureVector> runs);
ModelPredictions predict_all(const DiagnoserBundle& bundle, std::span<const double> raw_features);

struct LabelMetrics {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  double precision = 0.0;  // 0 when nothing was predicted
  double recall = 0.0;     // 0 when nothing was expected
};

struct Metrics {
  std::size_t count = 0;
  double exact_match_accuracy = 0.0;
  /// A sample counts when prediction and truth share a label, or when both
  /// are empty.
  double any_overlap_accuracy = 0.0;
  std::array<LabelMetrics, kFaultTypeCount> per_label{};
};

Metrics score_predictions(std::span<const FaultLabelSet> truth,
                          std::span<const FaultLabelSet> predicted);

struct EvaluationReport {
  Metrics ensemble;
  Metrics knn;
  Metrics tree;
  Metrics forest;
};

EvaluationReport evaluate(const DiagnoserBundle& bundle, std::span<const LabeledSample> held_out);

std::string bundle_to_json(const DiagnoserBundle& bundle);
DiagnoserBundle bundle_from_json(std::string_view text);

std::string diagnosis_to_json(const DiagnosisReport& report, int indent = 2);
std::string metrics_to_json(const EvaluationReport& report, int indent = 2);

}  // namespace tracediag
