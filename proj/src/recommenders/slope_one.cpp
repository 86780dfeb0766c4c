// Weighted Slope One. For target item j and user u:
//   P(u, j) = sum_i (dev(j, i) + r_ui) * c(j, i) / sum_i c(j, i)
// over items i rated by u that share at least one co-rater with j, where
// c(j, i) counts co-raters and dev(j, i) is their mean difference r_j - r_i.
// The deviation sums are stored instead of means so the numerator is
// accumulated as sum_diff(j, i) + r_ui * c(j, i) with no intermediate division.

#include <vector>

#include "models.hpp"

namespace metahybrid::detail {
namespace {

class SlopeOne final : public FittedRecommender {
 public:
  SlopeOne(const RecommenderSpec& spec, std::span<const RatingEvent> train,
           const ItemCatalog& catalog, std::uint64_t seed)
      : FittedRecommender(spec, train, catalog, seed) {
    const std::size_t n = index_.n_items();
    diff_sum_.assign(n * n, 0.0);
    count_.assign(n * n, 0);
    for (std::uint32_t u = 0; u < index_.n_users(); ++u) {
      const auto rated = index_.user_ratings(u);
      for (const auto& a : rated) {
        for (const auto& b : rated) {
          if (a.index == b.index) continue;
          diff_sum_[a.index * n + b.index] += a.rating - b.rating;
          ++count_[a.index * n + b.index];
        }
      }
    }
  }

  explicit SlopeOne(ArchiveReader& in) : FittedRecommender(in) {
    diff_sum_ = in.get_vector<double>();
    count_ = in.get_vector<std::uint32_t>();
    const std::size_t n = index_.n_items();
    if (diff_sum_.size() != n * n || count_.size() != n * n) {
      throw IngestError("SlopeOne archive: deviation matrix size mismatch");
    }
  }

 protected:
  std::optional<double> estimate(UserId user, ItemId item) const override {
    const auto u = index_.user_index(user);
    const auto j = index_.item_index(item);
    if (!u || !j) return std::nullopt;
    const std::size_t n = index_.n_items();
    double num = 0.0;
    double den = 0.0;
    for (const auto& e : index_.user_ratings(*u)) {
      if (e.index == *j) continue;
      const std::size_t cell = static_cast<std::size_t>(*j) * n + e.index;
      const auto c = count_[cell];
      if (c == 0) continue;
      num += diff_sum_[cell] + e.rating * static_cast<double>(c);
      den += static_cast<double>(c);
    }
    if (den == 0.0) return std::nullopt;
    return num / den;
  }

  void save_state(ArchiveWriter& out) const override {
    out.put_vector(diff_sum_);
    out.put_vector(count_);
  }

 private:
  // row j, column i: sum over co-raters of (r_j - r_i), and their count
  std::vector<double> diff_sum_;
  std::vector<std::uint32_t> count_;
};

}  // namespace

std::unique_ptr<FittedRecommender> fit_slope_one(const RecommenderSpec& spec,
                                                 std::span<const RatingEvent> train,
                                                 const ItemCatalog& catalog, std::uint64_t seed) {
  return std::make_unique<SlopeOne>(spec, train, catalog, seed);
}

std::unique_ptr<FittedRecommender> load_slope_one(ArchiveReader& in) {
  return std::make_unique<SlopeOne>(in);
}

}  // namespace metahybrid::detail
