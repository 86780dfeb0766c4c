#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "metahybrid/recommenders.hpp"
#include "metahybrid/text.hpp"

namespace metahybrid {
namespace {

constexpr std::array kAlgorithms{Algorithm::BaselineOnly, Algorithm::SlopeOne,
                                 Algorithm::CoClustering, Algorithm::SvdMf,
                                 Algorithm::KnnBasic,     Algorithm::ContentBased,
                                 Algorithm::WarpHybrid};

// Keys whose values must be whole numbers >= 1.
bool is_count_param(const std::string& key) {
  static const std::set<std::string> kCounts{"epochs",     "factors",       "user_clusters",
                                             "item_clusters", "k",          "min_support",
                                             "components", "max_negatives"};
  return kCounts.contains(key);
}

std::string compute_fingerprint(const RecommenderSpec& spec, std::span<const RatingEvent> train,
                                std::uint64_t seed) {
  std::ostringstream s;
  s << algorithm_name(spec.algorithm) << ';';
  for (const auto& [k, v] : spec.params) s << k << '=' << format_number(v) << ';';
  s << "seed=" << seed << ';';
  for (const auto& r : train) {
    s << r.user.value << ',' << r.item.value << ',' << format_number(r.rating) << ','
      << r.timestamp << ';';
  }
  return sha256_hex(s.str());
}

}  // namespace

std::string_view algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::BaselineOnly:
      return "BaselineOnly";
    case Algorithm::SlopeOne:
      return "SlopeOne";
    case Algorithm::CoClustering:
      return "CoClustering";
    case Algorithm::SvdMf:
      return "SvdMf";
    case Algorithm::KnnBasic:
      return "KnnBasic";
    case Algorithm::ContentBased:
      return "ContentBased";
    case Algorithm::WarpHybrid:
      return "WarpHybrid";
  }
  throw InvalidArgument("unknown algorithm");
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : kAlgorithms) {
    if (algorithm_name(a) == name) return a;
  }
  throw InvalidArgument("unknown algorithm '" + std::string(name) + "'");
}

std::span<const Algorithm> all_algorithms() { return kAlgorithms; }

const ParamMap& default_params(Algorithm algorithm) {
  // Counts from the published parameter table; SGD step sizes, regularization
  // and init scale are our own fixed defaults.
  static const std::map<Algorithm, ParamMap> kDefaults{
      {Algorithm::BaselineOnly, {{"epochs", 20}, {"learn_rate", 0.005}, {"reg", 0.02}}},
      {Algorithm::SlopeOne, {}},
      {Algorithm::CoClustering, {{"user_clusters", 7}, {"item_clusters", 5}, {"epochs", 30}}},
      {Algorithm::SvdMf,
       {{"factors", 20}, {"epochs", 30}, {"learn_rate", 0.005}, {"reg", 0.02}, {"init_std", 0.1}}},
      {Algorithm::KnnBasic, {{"k", 50}, {"min_support", 1}}},
      {Algorithm::ContentBased, {}},
      {Algorithm::WarpHybrid,
       {{"components", 30},
        {"epochs", 30},
        {"learn_rate", 0.05},
        {"reg", 0.0},
        {"max_negatives", 100},
        {"positive_threshold", 4.0},
        {"margin", 1.0}}},
  };
  return kDefaults.at(algorithm);
}

void validate_spec(const RecommenderSpec& spec) {
  const auto& schema = default_params(spec.algorithm);
  for (const auto& [key, value] : spec.params) {
    const std::string where = std::string(algorithm_name(spec.algorithm)) + "." + key;
    if (!schema.contains(key)) throw InvalidArgument("unknown parameter " + where);
    if (!std::isfinite(value)) throw InvalidArgument(where + " must be finite");
    if (is_count_param(key) && (value < 1.0 || value != std::floor(value))) {
      throw InvalidArgument(where + " must be a whole number >= 1");
    }
    if ((key == "learn_rate" || key == "init_std") && value <= 0.0) {
      throw InvalidArgument(where + " must be > 0");
    }
    if ((key == "reg" || key == "margin") && value < 0.0) {
      throw InvalidArgument(where + " must be >= 0");
    }
    if (key == "positive_threshold" && (value < kMinRating || value > kMaxRating)) {
      throw InvalidArgument(where + " must lie in [1, 5]");
    }
  }
  for (const auto& [key, value] : schema) {
    if (!spec.params.contains(key)) {
      throw InvalidArgument("missing parameter " + std::string(algorithm_name(spec.algorithm)) +
                            "." + key);
    }
  }
}

RecommenderSpec RecommenderSpec::make(Algorithm algorithm, const ParamMap& overrides) {
  RecommenderSpec spec{algorithm, default_params(algorithm)};
  for (const auto& [key, value] : overrides) {
    if (!spec.params.contains(key)) {
      throw InvalidArgument("unknown parameter " + std::string(algorithm_name(algorithm)) + "." +
                            key);
    }
    spec.params[key] = value;
  }
  validate_spec(spec);
  return spec;
}

double RecommenderSpec::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) {
    throw InvalidArgument("missing parameter " + std::string(algorithm_name(algorithm)) + "." + name);
  }
  return it->second;
}

std::size_t RecommenderSpec::count_param(const std::string& name) const {
  return static_cast<std::size_t>(param(name));
}

ItemCatalog ItemCatalog::from_dataset(const Dataset& dataset) {
  ItemCatalog catalog;
  for (const auto& [id, item] : dataset.items) catalog.add(id, Features{item.genres, item.keywords});
  return catalog;
}

void ItemCatalog::add(ItemId item, Features features) {
  auto pos = std::lower_bound(items_.begin(), items_.end(), item);
  if (pos == items_.end() || *pos != item) items_.insert(pos, item);
  features_[item] = std::move(features);
}

const ItemCatalog::Features* ItemCatalog::features(ItemId item) const {
  auto it = features_.find(item);
  return it == features_.end() ? nullptr : &it->second;
}

bool ItemCatalog::has_features() const {
  return std::any_of(features_.begin(), features_.end(), [](const auto& kv) {
    return !kv.second.genres.empty() || !kv.second.keywords.empty();
  });
}

TrainingIndex::TrainingIndex(std::span<const RatingEvent> train)
    : ratings_(train.begin(), train.end()), n_ratings_(train.size()) {
  for (const auto& r : train) {
    users_.push_back(r.user);
    items_.push_back(r.item);
  }
  std::sort(users_.begin(), users_.end());
  users_.erase(std::unique(users_.begin(), users_.end()), users_.end());
  std::sort(items_.begin(), items_.end());
  items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
  for (std::uint32_t i = 0; i < users_.size(); ++i) user_pos_[users_[i]] = i;
  for (std::uint32_t i = 0; i < items_.size(); ++i) item_pos_[items_[i]] = i;

  by_user_.resize(users_.size());
  by_item_.resize(items_.size());
  user_mean_.assign(users_.size(), 0.0);
  item_mean_.assign(items_.size(), 0.0);
  double total = 0.0;
  for (const auto& r : train) {
    const auto u = user_pos_.at(r.user);
    const auto i = item_pos_.at(r.item);
    by_user_[u].push_back({i, r.rating});
    by_item_[i].push_back({u, r.rating});
    user_mean_[u] += r.rating;
    item_mean_[i] += r.rating;
    total += r.rating;
  }
  auto by_index = [](const Entry& a, const Entry& b) { return a.index < b.index; };
  for (std::size_t u = 0; u < users_.size(); ++u) {
    std::sort(by_user_[u].begin(), by_user_[u].end(), by_index);
    user_mean_[u] /= static_cast<double>(by_user_[u].size());
  }
  for (std::size_t i = 0; i < items_.size(); ++i) {
    std::sort(by_item_[i].begin(), by_item_[i].end(), by_index);
    item_mean_[i] /= static_cast<double>(by_item_[i].size());
  }
  if (!train.empty()) global_mean_ = total / static_cast<double>(train.size());
}

std::optional<std::uint32_t> TrainingIndex::user_index(UserId u) const {
  auto it = user_pos_.find(u);
  if (it == user_pos_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> TrainingIndex::item_index(ItemId i) const {
  auto it = item_pos_.find(i);
  if (it == item_pos_.end()) return std::nullopt;
  return it->second;
}

FittedRecommender::FittedRecommender(RecommenderSpec spec, std::span<const RatingEvent> train,
                                     const ItemCatalog& catalog, std::uint64_t seed)
    : index_(train),
      spec_(std::move(spec)),
      seed_(seed),
      fingerprint_(compute_fingerprint(spec_, train, seed)),
      catalog_items_(catalog.items().begin(), catalog.items().end()) {
  if (train.empty()) {
    throw InvalidArgument("fit " + std::string(algorithm_name(spec_.algorithm)) +
                          ": empty training set");
  }
  validate_spec(spec_);
  // Items seen in training are recommendable even if the catalog omits them.
  std::vector<ItemId> merged;
  for (std::uint32_t i = 0; i < index_.n_items(); ++i) merged.push_back(index_.item_at(i));
  merged.insert(merged.end(), catalog_items_.begin(), catalog_items_.end());
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  catalog_items_ = std::move(merged);
}

FittedRecommender::FittedRecommender(ArchiveReader& in) {
  spec_.algorithm = parse_algorithm(in.get_string());
  const auto n_params = in.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < n_params; ++k) {
    auto key = in.get_string();
    spec_.params[key] = in.get<double>();
  }
  validate_spec(spec_);
  seed_ = in.get<std::uint64_t>();
  fingerprint_ = in.get_string();
  for (auto v : in.get_vector<std::int64_t>()) catalog_items_.emplace_back(v);
  const auto users = in.get_vector<std::int64_t>();
  const auto items = in.get_vector<std::int64_t>();
  const auto ratings = in.get_vector<double>();
  const auto stamps = in.get_vector<std::int64_t>();
  if (items.size() != users.size() || ratings.size() != users.size() ||
      stamps.size() != users.size()) {
    throw IngestError("recommender archive: inconsistent training columns");
  }
  std::vector<RatingEvent> train(users.size());
  for (std::size_t k = 0; k < users.size(); ++k) {
    train[k] = RatingEvent{UserId(users[k]), ItemId(items[k]), ratings[k], stamps[k]};
  }
  index_ = TrainingIndex(train);
}

void FittedRecommender::save(ArchiveWriter& out) const {
  out.put_string(algorithm_name(spec_.algorithm));
  out.put<std::uint64_t>(spec_.params.size());
  for (const auto& [k, v] : spec_.params) {
    out.put_string(k);
    out.put(v);
  }
  out.put<std::uint64_t>(seed_);
  out.put_string(fingerprint_);
  std::vector<std::int64_t> cat;
  for (ItemId i : catalog_items_) cat.push_back(i.value);
  out.put_vector(cat);
  std::vector<std::int64_t> users, items, stamps;
  std::vector<double> ratings;
  for (const auto& r : index_.ratings()) {
    users.push_back(r.user.value);
    items.push_back(r.item.value);
    ratings.push_back(r.rating);
    stamps.push_back(r.timestamp);
  }
  out.put_vector(users);
  out.put_vector(items);
  out.put_vector(ratings);
  out.put_vector(stamps);
  save_state(out);
}

double FittedRecommender::fallback(UserId user, ItemId item) const {
  fallbacks_.fetch_add(1, std::memory_order_relaxed);
  if (auto i = index_.item_index(item)) return index_.item_mean(*i);
  if (auto u = index_.user_index(user)) return index_.user_mean(*u);
  if (index_.n_ratings() > 0) return index_.global_mean();
  return kScaleMidpoint;
}

void FittedRecommender::estimate_many(UserId user, std::span<const ItemId> items,
                                      std::span<std::optional<double>> out) const {
  for (std::size_t k = 0; k < items.size(); ++k) out[k] = estimate(user, items[k]);
}

std::vector<double> FittedRecommender::predict_many(UserId user,
                                                    std::span<const ItemId> items) const {
  std::vector<std::optional<double>> raw(items.size());
  estimate_many(user, items, raw);
  std::vector<double> out(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    const double v = (raw[k] && std::isfinite(*raw[k])) ? *raw[k] : fallback(user, items[k]);
    out[k] = std::clamp(v, kMinRating, kMaxRating);
  }
  return out;
}

double FittedRecommender::predict_rating(UserId user, ItemId item) const {
  const ItemId one[] = {item};
  return predict_many(user, one).front();
}

std::vector<double> FittedRecommender::ranking_scores(UserId user,
                                                      std::span<const ItemId> items) const {
  return predict_many(user, items);
}

std::vector<ItemId> FittedRecommender::recommend_top_n(UserId user, std::size_t n,
                                                       const std::set<ItemId>& exclude) const {
  if (n < 1) throw InvalidArgument("recommend_top_n: n must be >= 1");
  std::vector<ItemId> candidates;
  candidates.reserve(catalog_items_.size());
  for (ItemId i : catalog_items_) {
    if (!exclude.contains(i)) candidates.push_back(i);
  }
  const auto scores = ranking_scores(user, candidates);
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t take = std::min(n, order.size());
  // candidates are sorted by id, so the index doubles as the tie-break
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  std::vector<ItemId> out;
  out.reserve(take);
  for (std::size_t k = 0; k < take; ++k) out.push_back(candidates[order[k]]);
  return out;
}

std::optional<double> cosine_on_corated(const TrainingIndex& index, std::uint32_t u,
                                        std::uint32_t v, std::size_t min_support) {
  const auto a = index.user_ratings(u);
  const auto b = index.user_ratings(v);
  double dot = 0.0, na = 0.0, nb = 0.0;
  std::size_t common = 0;
  for (std::size_t x = 0, y = 0; x < a.size() && y < b.size();) {
    if (a[x].index < b[y].index) {
      ++x;
    } else if (b[y].index < a[x].index) {
      ++y;
    } else {
      dot += a[x].rating * b[y].rating;
      na += a[x].rating * a[x].rating;
      nb += b[y].rating * b[y].rating;
      ++common;
      ++x;
      ++y;
    }
  }
  if (common < min_support || na <= 0.0 || nb <= 0.0) return std::nullopt;
  return dot / std::sqrt(na * nb);
}

}  // namespace metahybrid
