#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metahybrid/archive.hpp"
#include "metahybrid/matrix.hpp"

namespace metahybrid {

struct ForestParams {
  std::size_t n_estimators = 500;
  std::optional<std::size_t> max_depth;     // unbounded when empty
  std::size_t min_samples_split = 3;
  std::size_t min_samples_leaf = 2;
  std::optional<std::size_t> max_features;  // ceil(sqrt(d)) when empty
  bool bootstrap = true;
  bool balanced_class_weight = false;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate() const;
};

/// Gini impurity 1 - sum(p_k^2) of (possibly weighted) class counts.
double gini(std::span<const double> counts);

/// Flat CART tree. Internal nodes have feature >= 0; leaves point at a class
/// distribution.
struct DecisionTree {
  struct Node {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t leaf = -1;  // offset / n_classes into `distributions`
    std::uint32_t samples = 0;
  };
  std::vector<Node> nodes;
  std::vector<double> distributions;  // n_leaves x n_classes, each row sums to 1
  std::vector<double> importance;     // per feature, normalized within the tree
  std::uint64_t seed = 0;

  /// Leaf class distribution reached by x.
  std::span<const double> leaf_for(std::span<const double> x, std::size_t n_classes) const;
};

struct LabelPrediction {
  std::size_t label = 0;
  std::vector<double> probabilities;
};

class ForestModel {
 public:
  ForestModel() = default;

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t n_features() const { return n_features_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  /// Soft vote: mean of the trees' leaf distributions; ties go to the
  /// earliest label in the vocabulary.
  LabelPrediction predict(std::span<const double> x) const;

  /// Mean impurity-decrease importance per feature, summing to 1 (all zero
  /// when no tree ever split).
  std::vector<double> importances() const;

  /// Out-of-bag misclassification rate; nullopt without bootstrap or when no
  /// sample was ever out of bag.
  std::optional<double> oob_error() const { return oob_error_; }

  void save(ArchiveWriter& out) const;
  static ForestModel load(ArchiveReader& in);
  void save(const std::filesystem::path& path) const;
  static ForestModel load(const std::filesystem::path& path);

  friend ForestModel train_forest(const Matrix&, std::span<const std::size_t>,
                                  std::vector<std::string>, const ForestParams&,
                                  std::vector<std::string>*);

 private:
  std::vector<std::string> labels_;
  std::size_t n_features_ = 0;
  std::vector<DecisionTree> trees_;
  std::optional<double> oob_error_;
};

/// Trains a forest on rows of X with labels y, indices into `vocabulary`.
ForestModel train_forest(const Matrix& X, std::span<const std::size_t> y,
                         std::vector<std::string> vocabulary, const ForestParams& params,
                         std::vector<std::string>* warnings = nullptr);

/// (name, importance) sorted by descending importance, ties by column order.
std::vector<std::pair<std::string, double>> ranked_importances(
    const ForestModel& model, std::span<const std::string> feature_names);

/// Importances summed per source attribute, in descending order.
std::vector<std::pair<std::string, double>> grouped_importances(
    const ForestModel& model, std::span<const std::string> feature_sources);

}  // namespace metahybrid
