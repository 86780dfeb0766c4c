#include "metahybrid/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "metahybrid/parallel.hpp"
#include "metahybrid/rng.hpp"

namespace metahybrid {
namespace {

constexpr std::uint32_t kForestVersion = 1;
constexpr double kMinGain = 1e-12;

struct Sample {
  std::uint32_t row;
  double weight;
};

struct Split {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const std::size_t> y, std::size_t n_classes,
              const ForestParams& params, std::size_t max_features, std::uint64_t seed)
      : X_(X), y_(y), n_classes_(n_classes), params_(params),
        max_features_(max_features), rng_(seed) {
    tree_.seed = seed;
    tree_.importance.assign(X.cols, 0.0);
  }

  DecisionTree build(std::vector<Sample> samples) {
    grow(samples, 0);
    const double total = std::accumulate(tree_.importance.begin(), tree_.importance.end(), 0.0);
    if (total > 0.0) {
      for (auto& v : tree_.importance) v /= total;
    }
    return std::move(tree_);
  }

  Rng& rng() { return rng_; }

 private:
  std::vector<double> class_counts(std::span<const Sample> samples) const {
    std::vector<double> c(n_classes_, 0.0);
    for (const auto& s : samples) c[y_[s.row]] += s.weight;
    return c;
  }

  std::int32_t make_leaf(std::span<const Sample> samples) {
    auto counts = class_counts(samples);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    for (auto& c : counts) c = total > 0.0 ? c / total : 1.0 / static_cast<double>(n_classes_);
    DecisionTree::Node node;
    node.leaf = static_cast<std::int32_t>(tree_.distributions.size() / n_classes_);
    node.samples = static_cast<std::uint32_t>(samples.size());
    tree_.distributions.insert(tree_.distributions.end(), counts.begin(), counts.end());
    tree_.nodes.push_back(node);
    return static_cast<std::int32_t>(tree_.nodes.size() - 1);
  }

  /// Best threshold on one feature; gain is the weighted Gini decrease
  /// normalized by the node weight.
  std::optional<Split> best_on_feature(std::vector<Sample>& samples, std::size_t feature,
                                       double parent_impurity, double total_weight) const {
    std::sort(samples.begin(), samples.end(), [&](const Sample& a, const Sample& b) {
      const double va = X_(a.row, feature), vb = X_(b.row, feature);
      if (va != vb) return va < vb;
      return a.row < b.row;
    });
    std::vector<double> left(n_classes_, 0.0), right = class_counts(samples);
    double wl = 0.0, wr = total_weight;
    std::optional<Split> best;
    const std::size_t leaf = params_.min_samples_leaf;
    for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
      const auto& s = samples[k];
      left[y_[s.row]] += s.weight;
      right[y_[s.row]] -= s.weight;
      wl += s.weight;
      wr -= s.weight;
      const double a = X_(s.row, feature), b = X_(samples[k + 1].row, feature);
      if (a == b) continue;
      const std::size_t n_left = k + 1, n_right = samples.size() - n_left;
      if (n_left < leaf || n_right < leaf) continue;
      const double gain = parent_impurity - (wl / total_weight) * gini(left) -
                          (wr / total_weight) * gini(right);
      const double threshold = a + (b - a) / 2.0;
      if (!best || gain > best->gain) {
        best = Split{static_cast<std::int32_t>(feature), threshold, gain};
      }
    }
    return best;
  }

  std::int32_t grow(std::vector<Sample>& samples, std::size_t depth) {
    const auto counts = class_counts(samples);
    const double total_weight = std::accumulate(counts.begin(), counts.end(), 0.0);
    const double impurity = gini(counts);
    const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
    if (samples.size() < params_.min_samples_split || impurity <= 0.0 || depth_reached ||
        total_weight <= 0.0) {
      return make_leaf(samples);
    }

    std::vector<std::size_t> features(X_.cols);
    std::iota(features.begin(), features.end(), std::size_t{0});
    rng_.shuffle(features);
    std::optional<Split> best;
    std::size_t examined = 0;
    std::vector<Sample> work = samples;
    for (std::size_t f : features) {
      if (examined >= max_features_) break;
      const double first = X_(samples.front().row, f);
      const bool constant = std::all_of(samples.begin(), samples.end(),
                                        [&](const Sample& s) { return X_(s.row, f) == first; });
      if (constant) continue;
      ++examined;
      auto candidate = best_on_feature(work, f, impurity, total_weight);
      if (!candidate) continue;
      const bool better =
          !best || candidate->gain > best->gain ||
          (candidate->gain == best->gain &&
           (candidate->feature < best->feature ||
            (candidate->feature == best->feature && candidate->threshold < best->threshold)));
      if (better) best = candidate;
    }
    if (!best || best->gain <= kMinGain) return make_leaf(samples);

    std::vector<Sample> left, right;
    for (const auto& s : samples) {
      (X_(s.row, static_cast<std::size_t>(best->feature)) <= best->threshold ? left : right)
          .push_back(s);
    }
    tree_.importance[static_cast<std::size_t>(best->feature)] += best->gain * total_weight;

    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    DecisionTree::Node node;
    node.feature = best->feature;
    node.threshold = best->threshold;
    node.samples = static_cast<std::uint32_t>(samples.size());
    tree_.nodes.push_back(node);
    samples.clear();
    samples.shrink_to_fit();
    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    tree_.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const Matrix& X_;
  std::span<const std::size_t> y_;
  std::size_t n_classes_;
  const ForestParams& params_;
  std::size_t max_features_;
  Rng rng_;
  DecisionTree tree_;
};

}  // namespace

double gini(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (double c : counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

void ForestParams::validate() const {
  if (n_estimators < 1) throw InvalidArgument("forest.n_estimators must be >= 1");
  if (min_samples_split < 2) throw InvalidArgument("forest.min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw InvalidArgument("forest.min_samples_leaf must be >= 1");
  if (max_depth && *max_depth < 1) throw InvalidArgument("forest.max_depth must be >= 1");
  if (max_features && *max_features < 1) throw InvalidArgument("forest.max_features must be >= 1");
}

std::span<const double> DecisionTree::leaf_for(std::span<const double> x,
                                               std::size_t n_classes) const {
  std::size_t at = 0;
  while (nodes[at].feature >= 0) {
    const auto& n = nodes[at];
    at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                          : n.right);
  }
  return std::span<const double>(distributions)
      .subspan(static_cast<std::size_t>(nodes[at].leaf) * n_classes, n_classes);
}

ForestModel train_forest(const Matrix& X, std::span<const std::size_t> y,
                         std::vector<std::string> vocabulary, const ForestParams& params,
                         std::vector<std::string>* warnings) {
  params.validate();
  if (X.rows == 0) throw InvalidArgument("train_forest: empty training set");
  if (X.rows != y.size()) throw InvalidArgument("train_forest: X and y lengths differ");
  if (X.rows < params.min_samples_split && warnings) {
    warnings->push_back("forest: " + std::to_string(X.rows) +
                        " training rows, below min_samples_split; every tree is a single leaf");
  }
  if (vocabulary.empty()) throw InvalidArgument("train_forest: empty label vocabulary");
  for (auto label : y) {
    if (label >= vocabulary.size()) throw InvalidArgument("train_forest: label outside vocabulary");
  }
  const std::size_t n_classes = vocabulary.size();
  const std::size_t d = X.cols;
  const std::size_t max_features =
      params.max_features ? std::min(*params.max_features, d)
                          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));

  std::vector<double> class_weight(n_classes, 1.0);
  std::vector<std::size_t> class_n(n_classes, 0);
  for (auto label : y) ++class_n[label];
  if (params.balanced_class_weight) {
    const double present = static_cast<double>(
        std::count_if(class_n.begin(), class_n.end(), [](std::size_t n) { return n > 0; }));
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (class_n[c] > 0) {
        class_weight[c] = static_cast<double>(y.size()) / (present * static_cast<double>(class_n[c]));
      }
    }
  }
  if (warnings) {
    const bool multi = std::count_if(class_n.begin(), class_n.end(),
                                     [](std::size_t n) { return n > 0; }) > 1;
    bool any_varying = false;
    for (std::size_t f = 0; f < d && !any_varying; ++f) {
      for (std::size_t r = 1; r < X.rows; ++r) {
        if (X(r, f) != X(0, f)) {
          any_varying = true;
          break;
        }
      }
    }
    if (multi && !any_varying) {
      warnings->push_back("train_forest: every feature is constant; trees reduce to class priors");
    }
  }

  ForestModel model;
  model.labels_ = std::move(vocabulary);
  model.n_features_ = d;
  model.trees_.resize(params.n_estimators);
  std::vector<std::vector<std::uint32_t>> in_bag(params.n_estimators);

  parallel_for(params.n_estimators, params.threads, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(params.seed, "tree/" + std::to_string(t));
    TreeBuilder builder(X, y, n_classes, params, max_features, seed);
    std::vector<Sample> samples;
    samples.reserve(X.rows);
    auto& counts = in_bag[t];
    counts.assign(X.rows, 0);
    for (std::size_t k = 0; k < X.rows; ++k) {
      const auto row = params.bootstrap ? static_cast<std::uint32_t>(builder.rng().index(X.rows))
                                        : static_cast<std::uint32_t>(k);
      ++counts[row];
      samples.push_back({row, class_weight[y[row]]});
    }
    model.trees_[t] = builder.build(std::move(samples));
  });

  if (params.bootstrap) {
    std::size_t evaluated = 0, wrong = 0;
    std::vector<double> votes(n_classes);
    for (std::size_t r = 0; r < X.rows; ++r) {
      std::fill(votes.begin(), votes.end(), 0.0);
      std::size_t n_votes = 0;
      for (std::size_t t = 0; t < model.trees_.size(); ++t) {
        if (in_bag[t][r] != 0) continue;
        const auto leaf = model.trees_[t].leaf_for(X.row(r), n_classes);
        for (std::size_t c = 0; c < n_classes; ++c) votes[c] += leaf[c];
        ++n_votes;
      }
      if (n_votes == 0) continue;
      ++evaluated;
      const auto best = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) -
                                                 votes.begin());
      if (best != y[r]) ++wrong;
    }
    if (evaluated > 0) model.oob_error_ = static_cast<double>(wrong) / static_cast<double>(evaluated);
  }
  return model;
}

LabelPrediction ForestModel::predict(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw InvalidArgument("ForestModel::predict: expected " + std::to_string(n_features_) +
                          " features, got " + std::to_string(x.size()));
  }
  const std::size_t n_classes = labels_.size();
  LabelPrediction p;
  p.probabilities.assign(n_classes, 0.0);
  for (const auto& tree : trees_) {
    const auto leaf = tree.leaf_for(x, n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) p.probabilities[c] += leaf[c];
  }
  for (auto& v : p.probabilities) v /= static_cast<double>(trees_.size());
  // max_element returns the first maximum, i.e. the earliest label
  p.label = static_cast<std::size_t>(
      std::max_element(p.probabilities.begin(), p.probabilities.end()) - p.probabilities.begin());
  return p;
}

std::vector<double> ForestModel::importances() const {
  std::vector<double> out(n_features_, 0.0);
  for (const auto& tree : trees_) {
    for (std::size_t f = 0; f < n_features_; ++f) out[f] += tree.importance[f];
  }
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  if (total > 0.0) {
    for (auto& v : out) v /= total;
  }
  return out;
}

void ForestModel::save(ArchiveWriter& out) const {
  out.put<std::uint64_t>(labels_.size());
  for (const auto& l : labels_) out.put_string(l);
  out.put<std::uint64_t>(n_features_);
  out.put<std::uint8_t>(oob_error_ ? 1 : 0);
  out.put<double>(oob_error_.value_or(0.0));
  out.put<std::uint64_t>(trees_.size());
  for (const auto& t : trees_) {
    out.put<std::uint64_t>(t.seed);
    out.put<std::uint64_t>(t.nodes.size());
    for (const auto& n : t.nodes) {
      out.put<std::int32_t>(n.feature);
      out.put<double>(n.threshold);
      out.put<std::int32_t>(n.left);
      out.put<std::int32_t>(n.right);
      out.put<std::int32_t>(n.leaf);
      out.put<std::uint32_t>(n.samples);
    }
    out.put_vector(t.distributions);
    out.put_vector(t.importance);
  }
}

ForestModel ForestModel::load(ArchiveReader& in) {
  ForestModel m;
  m.labels_.resize(in.get<std::uint64_t>());
  for (auto& l : m.labels_) l = in.get_string();
  m.n_features_ = in.get<std::uint64_t>();
  const bool has_oob = in.get<std::uint8_t>() != 0;
  const double oob = in.get<double>();
  if (has_oob) m.oob_error_ = oob;
  m.trees_.resize(in.get<std::uint64_t>());
  const std::size_t n_classes = m.labels_.size();
  for (auto& t : m.trees_) {
    t.seed = in.get<std::uint64_t>();
    t.nodes.resize(in.get<std::uint64_t>());
    for (auto& n : t.nodes) {
      n.feature = in.get<std::int32_t>();
      n.threshold = in.get<double>();
      n.left = in.get<std::int32_t>();
      n.right = in.get<std::int32_t>();
      n.leaf = in.get<std::int32_t>();
      n.samples = in.get<std::uint32_t>();
    }
    t.distributions = in.get_vector<double>();
    t.importance = in.get_vector<double>();
    const auto n_nodes = static_cast<std::int32_t>(t.nodes.size());
    const auto n_leaves = n_classes ? static_cast<std::int32_t>(t.distributions.size() / n_classes) : 0;
    for (const auto& n : t.nodes) {
      const bool ok = n.feature >= 0
                          ? (static_cast<std::size_t>(n.feature) < m.n_features_ && n.left > 0 &&
                             n.left < n_nodes && n.right > 0 && n.right < n_nodes)
                          : (n.leaf >= 0 && n.leaf < n_leaves);
      if (!ok) throw IngestError("forest archive: corrupt tree node");
    }
    if (t.nodes.empty() || t.importance.size() != m.n_features_) {
      throw IngestError("forest archive: corrupt tree");
    }
  }
  return m;
}

void ForestModel::save(const std::filesystem::path& path) const {
  ArchiveWriter out("MHRF", kForestVersion);
  save(out);
  out.save(path);
}

ForestModel ForestModel::load(const std::filesystem::path& path) {
  auto in = ArchiveReader::open(path, "MHRF", kForestVersion);
  auto m = load(in);
  if (!in.at_end()) throw IngestError("forest archive: trailing bytes in " + path.string());
  return m;
}

std::vector<std::pair<std::string, double>> ranked_importances(
    const ForestModel& model, std::span<const std::string> feature_names) {
  const auto imp = model.importances();
  if (feature_names.size() != imp.size()) {
    throw InvalidArgument("ranked_importances: name count does not match feature count");
  }
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t f = 0; f < imp.size(); ++f) out.emplace_back(feature_names[f], imp[f]);
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::vector<std::pair<std::string, double>> grouped_importances(
    const ForestModel& model, std::span<const std::string> feature_sources) {
  const auto imp = model.importances();
  if (feature_sources.size() != imp.size()) {
    throw InvalidArgument("grouped_importances: source count does not match feature count");
  }
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t f = 0; f < imp.size(); ++f) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const auto& p) { return p.first == feature_sources[f]; });
    if (it == out.end()) {
      out.emplace_back(feature_sources[f], imp[f]);
    } else {
      it->second += imp[f];
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

}  // namespace metahybrid
