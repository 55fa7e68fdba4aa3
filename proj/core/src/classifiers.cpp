#include "tracediag/classifiers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <thread>

#include "json.hpp"
#include "tracediag/error.hpp"
#include "tracediag/rng.hpp"

namespace tracediag {
namespace {

using json = nlohmann::ordered_json;

void require_dimension(std::span<const double> x, std::size_t expected, const char* who) {
  if (x.size() != expected) {
    throw Error(ErrorKind::DimensionMismatch, std::string(who) + ": expected " +
                                                  std::to_string(expected) + " features, got " +
                                                  std::to_string(x.size()));
  }
}

std::size_t checked_dimension(std::span<const LabeledSample> data) {
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "no training samples");
  const std::size_t d = data.front().features.size();
  if (d == 0) throw Error(ErrorKind::DimensionMismatch, "samples have no features");
  for (const auto& s : data) {
    if (s.features.size() != d) {
      throw Error(ErrorKind::DimensionMismatch,
                  "sample '" + s.origin_id + "' has " + std::to_string(s.features.size()) +
                      " features, expected " + std::to_string(d));
    }
  }
  return d;
}

// Runs fn(0..count-1) on up to hardware_concurrency threads. Tasks must not
// share mutable state; results are written by index.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// CART construction

struct Split {
  double impurity = std::numeric_limits<double>::infinity();
  std::size_t feature = 0;
  double threshold = 0.0;
};

bool better(const Split& cand, const std::optional<Split>& best) {
  if (!best) return true;
  if (cand.impurity != best->impurity) return cand.impurity < best->impurity;
  if (cand.feature != best->feature) return cand.feature < best->feature;
  return cand.threshold < best->threshold;
}

// Sum of n * gini over both children, i.e. n * weighted impurity.
double split_impurity(double n_left, double pos_left, double n_right, double pos_right) {
  const double gl = 2.0 * pos_left * (n_left - pos_left) / n_left;
  const double gr = 2.0 * pos_right * (n_right - pos_right) / n_right;
  return gl + gr;
}

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<FeatureVector>& x, const std::vector<std::uint8_t>& y,
              const TreeParams& params, std::size_t max_features, Rng* rng)
      : x_(x), y_(y), params_(params), max_features_(max_features), rng_(rng) {
    dim_ = x.empty() ? 0 : x.front().size();
  }

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::size_t pos = 0;
    for (std::size_t r : rows) pos += y_[r];
    const std::size_t n = rows.size();
    nodes_[id].leaf_value = n ? static_cast<double>(pos) / static_cast<double>(n) : 0.0;

    if (pos == 0 || pos == n || depth >= params_.max_depth ||
        n < static_cast<std::size_t>(params_.min_samples_split)) {
      return id;
    }
    const std::optional<Split> split = find_split(rows);
    if (!split) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x_[r][split->feature] <= split->threshold ? left : right).push_back(r);
    }
    nodes_[id].feature = static_cast<int>(split->feature);
    nodes_[id].threshold = split->threshold;
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::optional<Split> find_split(const std::vector<std::size_t>& rows) {
    std::vector<std::size_t> order(dim_);
    std::iota(order.begin(), order.end(), 0);
    if (rng_) rng_->shuffle(order.begin(), order.end());

    const double n = static_cast<double>(rows.size());
    double total_pos = 0.0;
    for (std::size_t r : rows) total_pos += y_[r];

    std::optional<Split> best;
    std::size_t evaluated = 0;
    std::vector<std::pair<double, std::uint8_t>> column(rows.size());

    for (std::size_t f : order) {
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x_[rows[i]][f], y_[rows[i]]};
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (column.front().first == column.back().first) continue;  // constant here
      ++evaluated;

      double left_n = 0.0;
      double left_pos = 0.0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        left_n += 1.0;
        left_pos += column[i].second;
        const double a = column[i].first;
        const double b = column[i + 1].first;
        if (a == b) continue;
        double mid = a + (b - a) * 0.5;
        if (!(mid < b)) mid = a;
        Split cand{split_impurity(left_n, left_pos, n - left_n, total_pos - left_pos), f, mid};
        if (better(cand, best)) best = cand;
      }
      if (max_features_ > 0 && evaluated >= max_features_) break;
    }
    return best;
  }

  const std::vector<FeatureVector>& x_;
  const std::vector<std::uint8_t>& y_;
  TreeParams params_;
  std::size_t max_features_;
  Rng* rng_;
  std::size_t dim_ = 0;
  std::vector<TreeNode> nodes_;
};

struct Columns {
  std::vector<FeatureVector> x;
  std::array<std::vector<std::uint8_t>, kFaultTypeCount> y;
};

Columns split_columns(std::span<const LabeledSample> data) {
  Columns c;
  c.x.reserve(data.size());
  for (auto& col : c.y) col.reserve(data.size());
  for (const auto& s : data) {
    c.x.push_back(s.features);
    for (FaultType t : kAllFaultTypes) {
      c.y[static_cast<std::size_t>(t)].push_back(s.labels.contains(t) ? 1 : 0);
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// JSON helpers

json nodes_to_json(const std::vector<TreeNode>& nodes) {
  json arr = json::array();
  for (const auto& n : nodes) {
    arr.push_back({{"feature", n.feature},
                   {"threshold", n.threshold},
                   {"left", n.left},
                   {"right", n.right},
                   {"leaf_value", n.leaf_value}});
  }
  return arr;
}

std::vector<TreeNode> nodes_from_json(const json& arr) {
  std::vector<TreeNode> nodes;
  for (const auto& j : arr) {
    TreeNode n;
    n.feature = j.at("feature").get<int>();
    n.threshold = j.at("threshold").get<double>();
    n.left = j.at("left").get<int>();
    n.right = j.at("right").get<int>();
    n.leaf_value = j.at("leaf_value").get<double>();
    nodes.push_back(n);
  }
  return nodes;
}

json params_to_json(const ClassifierParams& p) {
  return {{"knn", {{"k", p.knn.k}}},
          {"tree", {{"max_depth", p.tree.max_depth}, {"min_samples_split", p.tree.min_samples_split}}},
          {"forest",
           {{"trees", p.forest.trees},
            {"max_depth", p.forest.tree.max_depth},
            {"min_samples_split", p.forest.tree.min_samples_split},
            {"max_features", p.forest.max_features}}}};
}

ClassifierParams params_from_json(const json& j) {
  ClassifierParams p;
  p.knn.k = j.at("knn").at("k").get<int>();
  p.tree.max_depth = j.at("tree").at("max_depth").get<int>();
  p.tree.min_samples_split = j.at("tree").at("min_samples_split").get<int>();
  const json& f = j.at("forest");
  p.forest.trees = f.at("trees").get<int>();
  p.forest.tree.max_depth = f.at("max_depth").get<int>();
  p.forest.tree.min_samples_split = f.at("min_samples_split").get<int>();
  p.forest.max_features = f.at("max_features").get<std::size_t>();
  return p;
}

json labels_to_json(const FaultLabelSet& s) {
  json arr = json::array();
  for (FaultType t : s.types()) arr.push_back(std::string(fault_name(t)));
  return arr;
}

FaultLabelSet labels_from_json(const json& arr) {
  FaultLabelSet s;
  for (const auto& item : arr) {
    auto t = parse_fault_name(item.get<std::string>());
    if (!t) throw Error(ErrorKind::InvalidParams, "bundle: unknown label '" + item.get<std::string>() + "'");
    s.insert(*t);
  }
  return s;
}

json metrics_json(const Metrics& m) {
  json per = json::object();
  for (FaultType t : kAllFaultTypes) {
    const auto& lm = m.per_label[static_cast<std::size_t>(t)];
    per[std::string(fault_name(t))] = {{"precision", lm.precision},
                                       {"recall", lm.recall},
                                       {"tp", lm.true_positive},
                                       {"fp", lm.false_positive},
                                       {"fn", lm.false_negative}};
  }
  return {{"count", m.count},
          {"exact_match_accuracy", m.exact_match_accuracy},
          {"any_overlap_accuracy", m.any_overlap_accuracy},
          {"per_label", per}};
}

}  // namespace

// ---------------------------------------------------------------------------

void ClassifierParams::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidParams, m); };
  if (knn.k < 1) fail("knn.k must be >= 1");
  if (forest.trees < 1) fail("forest.trees must be >= 1");
  for (const TreeParams* t : {&tree, &forest.tree}) {
    if (t->max_depth < 1) fail("max_depth must be >= 1");
    if (t->min_samples_split < 2) fail("min_samples_split must be >= 2");
  }
}

KnnModel KnnModel::fit(std::span<const LabeledSample> data, const KnnParams& params) {
  checked_dimension(data);
  if (params.k < 1) throw Error(ErrorKind::InvalidParams, "knn.k must be >= 1");
  KnnModel m;
  m.k_ = params.k;
  for (const auto& s : data) {
    m.points_.push_back(s.features);
    m.labels_.push_back(s.labels);
  }
  return m;
}

KnnModel KnnModel::from_parts(int k, std::vector<FeatureVector> points,
                              std::vector<FaultLabelSet> labels) {
  if (k < 1) throw Error(ErrorKind::InvalidParams, "knn.k must be >= 1");
  if (points.size() != labels.size()) {
    throw Error(ErrorKind::InvalidParams, "knn: point and label counts differ");
  }
  KnnModel m;
  m.k_ = k;
  m.points_ = std::move(points);
  m.labels_ = std::move(labels);
  return m;
}

std::vector<std::size_t> KnnModel::neighbours(std::span<const double> x) const {
  if (!fitted()) throw Error(ErrorKind::ModelNotFitted, "knn model is not fitted");
  require_dimension(x, dimension(), "knn");
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = points_[i][j] - x[j];
      d += diff * diff;
    }
    dist.emplace_back(d, i);
  }
  const std::size_t k = std::min(points_.size(), static_cast<std::size_t>(k_));
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

FaultLabelSet KnnModel::predict(std::span<const double> x) const {
  const auto nn = neighbours(x);
  FaultLabelSet out;
  for (FaultType t : kAllFaultTypes) {
    std::size_t votes = 0;
    for (std::size_t i : nn) votes += labels_[i].contains(t);
    if (2 * votes > nn.size()) out.insert(t);
  }
  return out;
}

BinaryTree BinaryTree::fit(const std::vector<FeatureVector>& x, const std::vector<std::uint8_t>& y,
                           std::span<const std::size_t> rows, const TreeParams& params) {
  if (rows.empty()) throw Error(ErrorKind::EmptyDataset, "tree: no rows");
  BinaryTree t;
  t.nodes_ = TreeBuilder(x, y, params, 0, nullptr)
                 .build(std::vector<std::size_t>(rows.begin(), rows.end()));
  return t;
}

BinaryTree BinaryTree::fit_randomized(const std::vector<FeatureVector>& x,
                                      const std::vector<std::uint8_t>& y,
                                      std::span<const std::size_t> rows, const TreeParams& params,
                                      std::size_t max_features, std::uint64_t seed) {
  if (rows.empty()) throw Error(ErrorKind::EmptyDataset, "tree: no rows");
  Rng rng(seed);
  BinaryTree t;
  t.nodes_ = TreeBuilder(x, y, params, max_features, &rng)
                 .build(std::vector<std::size_t>(rows.begin(), rows.end()));
  return t;
}

double BinaryTree::score(std::span<const double> x) const {
  if (!fitted()) throw Error(ErrorKind::ModelNotFitted, "decision tree is not fitted");
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto f = static_cast<std::size_t>(nodes_[i].feature);
    if (f >= x.size()) {
      throw Error(ErrorKind::DimensionMismatch, "tree references feature " + std::to_string(f));
    }
    i = static_cast<std::size_t>(x[f] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right);
  }
  return nodes_[i].leaf_value;
}

std::size_t BinaryTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

BinaryTree BinaryTree::from_nodes(std::vector<TreeNode> nodes) {
  const auto n = static_cast<int>(nodes.size());
  for (int i = 0; i < n; ++i) {
    const auto& node = nodes[static_cast<std::size_t>(i)];
    if (!node.is_leaf() && (node.left <= i || node.right <= i || node.left >= n || node.right >= n)) {
      throw Error(ErrorKind::InvalidParams, "tree node " + std::to_string(i) + " has bad children");
    }
  }
  BinaryTree t;
  t.nodes_ = std::move(nodes);
  return t;
}

DecisionTreeModel DecisionTreeModel::fit(std::span<const LabeledSample> data,
                                         const TreeParams& params) {
  checked_dimension(data);
  const Columns c = split_columns(data);
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  DecisionTreeModel m;
  for (std::size_t l = 0; l < kFaultTypeCount; ++l) {
    m.per_label_[l] = BinaryTree::fit(c.x, c.y[l], rows, params);
  }
  return m;
}

FaultLabelSet DecisionTreeModel::predict(std::span<const double> x) const {
  if (!fitted()) throw Error(ErrorKind::ModelNotFitted, "decision tree model is not fitted");
  FaultLabelSet out;
  for (FaultType t : kAllFaultTypes) {
    if (tree(t).predict(x)) out.insert(t);
  }
  return out;
}

RandomForestModel RandomForestModel::fit(std::span<const LabeledSample> data,
                                         const ForestParams& params, std::uint64_t seed) {
  const std::size_t dim = checked_dimension(data);
  if (params.trees < 1) throw Error(ErrorKind::InvalidParams, "forest.trees must be >= 1");
  const Columns c = split_columns(data);
  const std::size_t n = data.size();
  const auto trees = static_cast<std::size_t>(params.trees);

  RandomForestModel m;
  m.max_features_ = params.max_features
                        ? std::min(params.max_features, dim)
                        : std::max<std::size_t>(1, static_cast<std::size_t>(
                                                       std::floor(std::sqrt(double(dim)))));
  for (std::size_t l = 0; l < kFaultTypeCount; ++l) {
    m.members_[l].resize(trees);
    for (std::size_t i = 0; i < trees; ++i) {
      m.members_[l][i].seed = derive_seed(seed, l * 1'000'003ULL + i);
    }
  }

  parallel_for(kFaultTypeCount * trees, [&](std::size_t task) {
    const std::size_t l = task / trees;
    Member& member = m.members_[l][task % trees];
    Rng boot(derive_seed(member.seed, "bootstrap"));
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = boot.index(n);
    member.tree = BinaryTree::fit_randomized(c.x, c.y[l], rows, params.tree, m.max_features_,
                                             derive_seed(member.seed, "features"));
  });
  return m;
}

RandomForestModel RandomForestModel::from_parts(
    std::size_t max_features, std::array<std::vector<Member>, kFaultTypeCount> members) {
  RandomForestModel m;
  m.max_features_ = max_features;
  m.members_ = std::move(members);
  return m;
}

FaultLabelSet RandomForestModel::predict(std::span<const double> x) const {
  if (!fitted()) throw Error(ErrorKind::ModelNotFitted, "random forest is not fitted");
  FaultLabelSet out;
  for (FaultType t : kAllFaultTypes) {
    const auto& ms = members(t);
    std::size_t votes = 0;
    for (const auto& member : ms) votes += member.tree.predict(x);
    if (2 * votes >= ms.size()) out.insert(t);
  }
  return out;
}

DiagnoserBundle train_diagnosers(std::span<const LabeledSample> data,
                                 const ClassifierParams& params, std::uint64_t seed,
                                 std::string trained_at) {
  params.validate();
  if (data.size() < 2) throw Error(ErrorKind::EmptyDataset, "need at least two training samples");
  checked_dimension(data);
  bool any_positive = false;
  bool any_negative = false;
  for (const auto& s : data) {
    any_positive = any_positive || !s.labels.empty();
    any_negative = any_negative || s.labels.size() < kFaultTypeCount;
  }
  if (!any_positive || !any_negative) {
    throw Error(ErrorKind::EmptyDataset,
                "training corpus needs at least one positive and one negative label");
  }

  std::vector<FeatureVector> raw;
  raw.reserve(data.size());
  for (const auto& s : data) raw.push_back(s.features);

  DiagnoserBundle b;
  b.norm = fit_normalizer(raw);
  std::vector<LabeledSample> scaled(data.begin(), data.end());
  for (auto& s : scaled) s.features = normalize(s.features, b.norm);

  b.knn = KnnModel::fit(scaled, params.knn);
  b.tree = DecisionTreeModel::fit(scaled, params.tree);
  b.forest = RandomForestModel::fit(scaled, params.forest, derive_seed(seed, "forest"));
  b.meta.trained_at = std::move(trained_at);
  b.meta.seed = seed;
  b.meta.samples = data.size();
  b.meta.params = params;
  return b;
}

ModelPredictions predict_all(const DiagnoserBundle& bundle, std::span<const double> raw_features) {
  if (!bundle.knn.fitted() || !bundle.tree.fitted() || !bundle.forest.fitted()) {
    throw Error(ErrorKind::ModelNotFitted, "diagnoser bundle is not fitted");
  }
  require_dimension(raw_features, bundle.dimension(), "diagnose");
  const FeatureVector x = normalize(raw_features, bundle.norm);
  return {bundle.knn.predict(x), bundle.tree.predict(x), bundle.forest.predict(x)};
}

DiagnosisReport diagnose(const DiagnoserBundle& bundle, std::span<const FeatureVector> runs) {
  if (runs.empty()) throw Error(ErrorKind::EmptyDataset, "diagnose: no runs supplied");
  DiagnosisReport report;
  for (const auto& run : runs) {
    const ModelPredictions p = predict_all(bundle, run);
    for (FaultType t : kAllFaultTypes) {
      auto& v = report.votes[static_cast<std::size_t>(t)];
      v += p.knn.contains(t) + p.tree.contains(t) + p.forest.contains(t);
    }
    report.final_labels |= p.united();
    report.runs.push_back(p);
  }
  return report;
}

Metrics score_predictions(std::span<const FaultLabelSet> truth,
                          std::span<const FaultLabelSet> predicted) {
  if (truth.empty()) throw Error(ErrorKind::EmptyDataset, "no samples to score");
  if (truth.size() != predicted.size()) {
    throw Error(ErrorKind::DimensionMismatch, "truth and prediction counts differ");
  }
  Metrics m;
  m.count = truth.size();
  std::size_t exact = 0;
  std::size_t overlap = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto& t = truth[i];
    const auto& p = predicted[i];
    exact += t == p;
    overlap += t.empty() ? p.empty() : !(t & p).empty();
    for (FaultType f : kAllFaultTypes) {
      auto& lm = m.per_label[static_cast<std::size_t>(f)];
      lm.true_positive += t.contains(f) && p.contains(f);
      lm.false_positive += !t.contains(f) && p.contains(f);
      lm.false_negative += t.contains(f) && !p.contains(f);
    }
  }
  const double n = static_cast<double>(m.count);
  m.exact_match_accuracy = static_cast<double>(exact) / n;
  m.any_overlap_accuracy = static_cast<double>(overlap) / n;
  for (auto& lm : m.per_label) {
    const double tp = static_cast<double>(lm.true_positive);
    const std::size_t predicted_pos = lm.true_positive + lm.false_positive;
    const std::size_t actual_pos = lm.true_positive + lm.false_negative;
    lm.precision = predicted_pos ? tp / static_cast<double>(predicted_pos) : 0.0;
    lm.recall = actual_pos ? tp / static_cast<double>(actual_pos) : 0.0;
  }
  return m;
}

EvaluationReport evaluate(const DiagnoserBundle& bundle, std::span<const LabeledSample> held_out) {
  if (held_out.empty()) throw Error(ErrorKind::EmptyDataset, "evaluate: no held-out samples");
  std::vector<FaultLabelSet> truth, ens, knn, tree, forest;
  for (const auto& s : held_out) {
    const ModelPredictions p = predict_all(bundle, s.features);
    truth.push_back(s.labels);
    ens.push_back(p.united());
    knn.push_back(p.knn);
    tree.push_back(p.tree);
    forest.push_back(p.forest);
  }
  return {score_predictions(truth, ens), score_predictions(truth, knn),
          score_predictions(truth, tree), score_predictions(truth, forest)};
}

std::string bundle_to_json(const DiagnoserBundle& b) {
  json knn_points = json::array();
  json knn_labels = json::array();
  for (const auto& p : b.knn.points()) knn_points.push_back(p);
  for (const auto& l : b.knn.labels()) knn_labels.push_back(labels_to_json(l));

  json trees = json::array();
  json forest = json::array();
  for (FaultType t : kAllFaultTypes) {
    trees.push_back({{"label", std::string(fault_name(t))}, {"nodes", nodes_to_json(b.tree.tree(t).nodes())}});
    json members = json::array();
    for (const auto& m : b.forest.members(t)) {
      members.push_back({{"seed", m.seed}, {"nodes", nodes_to_json(m.tree.nodes())}});
    }
    forest.push_back({{"label", std::string(fault_name(t))}, {"trees", std::move(members)}});
  }

  json j = {{"format", "tracediag-diagnosers"},
            {"version", b.meta.version},
            {"metadata",
             {{"trained_at", b.meta.trained_at},
              {"seed", b.meta.seed},
              {"samples", b.meta.samples},
              {"feature_count", b.dimension()},
              {"params", params_to_json(b.meta.params)}}},
            {"normalizer", {{"min", b.norm.min}, {"max", b.norm.max}}},
            {"knn", {{"k", b.knn.k()}, {"points", std::move(knn_points)}, {"labels", std::move(knn_labels)}}},
            {"tree", std::move(trees)},
            {"forest", {{"max_features", b.forest.max_features()}, {"labels", std::move(forest)}}}};
  return j.dump() + "\n";
}

DiagnoserBundle bundle_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "tracediag-diagnosers") {
      throw Error(ErrorKind::InvalidParams, "not a diagnoser bundle");
    }
    DiagnoserBundle b;
    b.meta.version = j.at("version").get<int>();
    if (b.meta.version != 1) {
      throw Error(ErrorKind::InvalidParams, "unsupported bundle version " + std::to_string(b.meta.version));
    }
    const json& meta = j.at("metadata");
    b.meta.trained_at = meta.at("trained_at").get<std::string>();
    b.meta.seed = meta.at("seed").get<std::uint64_t>();
    b.meta.samples = meta.at("samples").get<std::size_t>();
    b.meta.params = params_from_json(meta.at("params"));

    b.norm.min = j.at("normalizer").at("min").get<std::vector<double>>();
    b.norm.max = j.at("normalizer").at("max").get<std::vector<double>>();
    if (b.norm.min.size() != b.norm.max.size()) {
      throw Error(ErrorKind::InvalidParams, "normalizer arrays differ in length");
    }

    const json& knn = j.at("knn");
    std::vector<FeatureVector> points = knn.at("points").get<std::vector<FeatureVector>>();
    std::vector<FaultLabelSet> labels;
    for (const auto& l : knn.at("labels")) labels.push_back(labels_from_json(l));
    for (const auto& p : points) {
      if (p.size() != b.norm.dimension()) {
        throw Error(ErrorKind::DimensionMismatch, "knn point dimension differs from normalizer");
      }
    }
    b.knn = KnnModel::from_parts(knn.at("k").get<int>(), std::move(points), std::move(labels));

    const json& trees = j.at("tree");
    const json& forest = j.at("forest");
    std::array<std::vector<RandomForestModel::Member>, kFaultTypeCount> members;
    for (std::size_t i = 0; i < kFaultTypeCount; ++i) {
      const auto t = parse_fault_name(trees.at(i).at("label").get<std::string>());
      const auto ft = parse_fault_name(forest.at("labels").at(i).at("label").get<std::string>());
      if (!t || !ft || static_cast<std::size_t>(*t) != i || static_cast<std::size_t>(*ft) != i) {
        throw Error(ErrorKind::InvalidParams, "bundle labels out of canonical order");
      }
      b.tree.tree(*t) = BinaryTree::from_nodes(nodes_from_json(trees.at(i).at("nodes")));
      for (const auto& m : forest.at("labels").at(i).at("trees")) {
        members[i].push_back({m.at("seed").get<std::uint64_t>(),
                              BinaryTree::from_nodes(nodes_from_json(m.at("nodes")))});
      }
    }
    b.forest = RandomForestModel::from_parts(forest.at("max_features").get<std::size_t>(),
                                             std::move(members));
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidParams, std::string("malformed bundle: ") + e.what());
  }
}

std::string diagnosis_to_json(const DiagnosisReport& r, int indent) {
  json runs = json::array();
  for (const auto& p : r.runs) {
    runs.push_back({{"knn", labels_to_json(p.knn)},
                    {"tree", labels_to_json(p.tree)},
                    {"forest", labels_to_json(p.forest)}});
  }
  json votes = json::object();
  for (FaultType t : kAllFaultTypes) {
    votes[std::string(fault_name(t))] = r.votes[static_cast<std::size_t>(t)];
  }
  json j = {{"faults", labels_to_json(r.final_labels)},
            {"votes", votes},
            {"runs", runs}};
  return j.dump(indent);
}

std::string metrics_to_json(const EvaluationReport& r, int indent) {
  json j = {{"ensemble", metrics_json(r.ensemble)},
            {"knn", metrics_json(r.knn)},
            {"tree", metrics_json(r.tree)},
            {"forest", metrics_json(r.forest)}};
  return j.dump(indent);
}

}  // namespace tracediag
