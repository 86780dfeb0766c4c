// User-based kNN with cosine similarity on co-rated items. The estimate is the
// similarity-weighted mean of the k most similar users who rated the item.

#include <algorithm>
#include <cmath>

#include "models.hpp"

namespace metahybrid::detail {
namespace {

class KnnBasic final : public FittedRecommender {
 public:
  KnnBasic(const RecommenderSpec& spec, std::span<const RatingEvent> train,
           const ItemCatalog& catalog, std::uint64_t seed)
      : FittedRecommender(spec, train, catalog, seed) {
    load_params();
  }

  explicit KnnBasic(ArchiveReader& in) : FittedRecommender(in) { load_params(); }

 protected:
  std::optional<double> estimate(UserId user, ItemId item) const override {
    const auto u = index_.user_index(user);
    if (!u) return std::nullopt;
    return estimate_with(similarities(*u), *u, item);
  }

  void estimate_many(UserId user, std::span<const ItemId> items,
                     std::span<std::optional<double>> out) const override {
    const auto u = index_.user_index(user);
    if (!u) {
      std::fill(out.begin(), out.end(), std::nullopt);
      return;
    }
    const auto sims = similarities(*u);
    for (std::size_t k = 0; k < items.size(); ++k) out[k] = estimate_with(sims, *u, items[k]);
  }

  void save_state(ArchiveWriter&) const override {}

 private:
  void load_params() {
    k_ = spec().count_param("k");
    min_support_ = spec().count_param("min_support");
  }

  /// Cosine similarity of u to every user; NaN where they lack support.
  std::vector<double> similarities(std::uint32_t u) const {
    const std::size_t n = index_.n_users();
    std::vector<double> dot(n, 0.0), nu(n, 0.0), nv(n, 0.0);
    std::vector<std::uint32_t> common(n, 0);
    for (const auto& e : index_.user_ratings(u)) {
      for (const auto& f : index_.item_ratings(e.index)) {
        dot[f.index] += e.rating * f.rating;
        nu[f.index] += e.rating * e.rating;
        nv[f.index] += f.rating * f.rating;
        ++common[f.index];
      }
    }
    std::vector<double> sim(n, std::nan(""));
    for (std::size_t v = 0; v < n; ++v) {
      if (common[v] >= min_support_ && nu[v] > 0.0 && nv[v] > 0.0) {
        sim[v] = dot[v] / std::sqrt(nu[v] * nv[v]);
      }
    }
    return sim;
  }

  std::optional<double> estimate_with(const std::vector<double>& sim, std::uint32_t u,
                                      ItemId item) const {
    const auto i = index_.item_index(item);
    if (!i) return std::nullopt;
    std::vector<std::pair<double, const TrainingIndex::Entry*>> neighbors;
    for (const auto& f : index_.item_ratings(*i)) {
      if (f.index == u || std::isnan(sim[f.index])) continue;
      neighbors.emplace_back(sim[f.index], &f);
    }
    const std::size_t take = std::min(k_, neighbors.size());
    std::partial_sort(neighbors.begin(), neighbors.begin() + static_cast<std::ptrdiff_t>(take),
                      neighbors.end(), [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second->index < b.second->index;
                      });
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < take; ++k) {
      if (neighbors[k].first <= 0.0) continue;
      num += neighbors[k].first * neighbors[k].second->rating;
      den += neighbors[k].first;
    }
    if (den <= 0.0) return std::nullopt;
    return num / den;
  }

  std::size_t k_ = 0;
  std::size_t min_support_ = 1;
};

}  // namespace

std::unique_ptr<FittedRecommender> fit_knn(const RecommenderSpec& spec,
                                           std::span<const RatingEvent> train,
                                           const ItemCatalog& catalog, std::uint64_t seed) {
  return std::make_unique<KnnBasic>(spec, train, catalog, seed);
}

std::unique_ptr<FittedRecommender> load_knn(ArchiveReader& in) { return std::make_unique<KnnBasic>(in); }

}  // namespace metahybrid::detail
