// Hybrid latent-factor ranker trained with the WARP loss.
//
// Item representation: weighted sum of embeddings of the item's features
// (identity, genres, keywords; weights sum to 1), plus the matching bias sum.
// User representation: a per-user embedding. score(u, i) = u . item_i + b_i.
//
// For each positive (rating >= positive_threshold) negatives are drawn
// uniformly from the catalog until one scores within `margin` of the positive;
// the update is scaled by ln(floor((n_items - 1) / trials) + 1). Updates use
// per-coordinate Adagrad with accumulators starting at 1.

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "metahybrid/kernels.hpp"
#include "metahybrid/rng.hpp"
#include "models.hpp"

namespace metahybrid::detail {
namespace {

class WarpHybrid final : public FittedRecommender {
 public:
  WarpHybrid(const RecommenderSpec& spec, std::span<const RatingEvent> train,
             const ItemCatalog& catalog, std::uint64_t seed)
      : FittedRecommender(spec, train, catalog, seed), dim_(spec.count_param("components")) {
    if (!catalog.has_features()) {
      throw InvalidArgument("fit WarpHybrid: catalog carries no item features");
    }
    const auto cat = catalog_items();
    const std::size_t n_items = cat.size();

    // Feature ids: [0, n_items) are item identities, content tags follow.
    std::map<std::string, std::uint32_t> tags;
    for (ItemId id : cat) {
      if (const auto* f = catalog.features(id)) {
        for (const auto& g : f->genres) tags.emplace("g:" + g, 0);
        for (const auto& k : f->keywords) tags.emplace("k:" + k, 0);
      }
    }
    std::uint32_t next = static_cast<std::uint32_t>(n_items);
    for (auto& [name, idx] : tags) idx = next++;
    const std::size_t n_features = next;

    std::vector<std::vector<std::pair<std::uint32_t, double>>> item_features(n_items);
    for (std::size_t r = 0; r < n_items; ++r) {
      auto& row = item_features[r];
      row.emplace_back(static_cast<std::uint32_t>(r), 1.0);
      if (const auto* f = catalog.features(cat[r])) {
        for (const auto& g : f->genres) row.emplace_back(tags.at("g:" + g), 1.0);
        for (const auto& k : f->keywords) row.emplace_back(tags.at("k:" + k), 1.0);
      }
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      for (auto& e : row) e.second = 1.0 / static_cast<double>(row.size());
    }

    Rng rng(seed);
    const double scale = 1.0 / static_cast<double>(dim_);
    std::vector<double> feat_emb(n_features * dim_), feat_bias(n_features, 0.0);
    std::vector<double> feat_emb_acc(n_features * dim_, 1.0), feat_bias_acc(n_features, 1.0);
    for (auto& v : feat_emb) v = (rng.uniform() - 0.5) * scale;
    user_emb_.resize(index_.n_users() * dim_);
    for (auto& v : user_emb_) v = (rng.uniform() - 0.5) * scale;
    std::vector<double> user_acc(user_emb_.size(), 1.0);

    auto row_of = [&](ItemId id) {
      return static_cast<std::size_t>(std::lower_bound(cat.begin(), cat.end(), id) - cat.begin());
    };
    const double threshold = spec.param("positive_threshold");
    struct Positive {
      std::uint32_t user;
      std::uint32_t item_row;
    };
    std::vector<Positive> positives;
    std::vector<std::unordered_set<std::uint32_t>> user_positive(index_.n_users());
    for (const auto& r : index_.ratings()) {
      if (r.rating < threshold) continue;
      const auto u = *index_.user_index(r.user);
      const auto row = static_cast<std::uint32_t>(row_of(r.item));
      positives.push_back({u, row});
      user_positive[u].insert(row);
    }

    const auto epochs = spec.count_param("epochs");
    const auto max_negatives = spec.count_param("max_negatives");
    const double lr = spec.param("learn_rate");
    const double reg = spec.param("reg");
    const double margin = spec.param("margin");

    std::vector<double> rep_pos(dim_), rep_neg(dim_), user_old(dim_);
    auto represent = [&](std::size_t row, std::vector<double>& out) {
      std::fill(out.begin(), out.end(), 0.0);
      double bias = 0.0;
      for (const auto& [f, w] : item_features[row]) {
        kernels::axpy(w, std::span<const double>(feat_emb).subspan(f * dim_, dim_), out);
        bias += w * feat_bias[f];
      }
      return bias;
    };
    auto adagrad = [lr](double& param, double& acc, double grad) {
      param += lr * grad / std::sqrt(acc);
      acc += grad * grad;
    };
    auto update_item = [&](std::size_t row, double sign, double weight) {
      for (const auto& [f, w] : item_features[row]) {
        double* e = feat_emb.data() + f * dim_;
        double* a = feat_emb_acc.data() + f * dim_;
        for (std::size_t k = 0; k < dim_; ++k) {
          adagrad(e[k], a[k], sign * weight * w * user_old[k] - reg * e[k]);
        }
        adagrad(feat_bias[f], feat_bias_acc[f], sign * weight * w);
      }
    };

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      rng.shuffle(positives);
      for (const auto& p : positives) {
        auto ue = std::span<double>(user_emb_).subspan(p.user * dim_, dim_);
        const double pos_bias = represent(p.item_row, rep_pos);
        const double pos_score = pos_bias + kernels::dot(ue, rep_pos);
        for (std::size_t trial = 1; trial <= max_negatives; ++trial) {
          const std::size_t neg = rng.index(n_items);
          if (user_positive[p.user].contains(static_cast<std::uint32_t>(neg))) continue;
          const double neg_bias = represent(neg, rep_neg);
          const double neg_score = neg_bias + kernels::dot(ue, rep_neg);
          if (neg_score <= pos_score - margin) continue;

          const double weight =
              std::log(std::floor(static_cast<double>(n_items - 1) / static_cast<double>(trial)) + 1.0);
          std::copy(ue.begin(), ue.end(), user_old.begin());
          double* ua = user_acc.data() + p.user * dim_;
          for (std::size_t k = 0; k < dim_; ++k) {
            adagrad(ue[k], ua[k], weight * (rep_pos[k] - rep_neg[k]) - reg * user_old[k]);
          }
          update_item(p.item_row, 1.0, weight);
          update_item(neg, -1.0, weight);
          break;
        }
      }
    }

    item_rep_.assign(n_items * dim_, 0.0);
    item_bias_.assign(n_items, 0.0);
    std::vector<double> rep(dim_);
    for (std::size_t r = 0; r < n_items; ++r) {
      item_bias_[r] = represent(r, rep);
      std::copy(rep.begin(), rep.end(), item_rep_.begin() + static_cast<std::ptrdiff_t>(r * dim_));
    }
    compute_user_ranges();
  }

  explicit WarpHybrid(ArchiveReader& in) : FittedRecommender(in) {
    dim_ = in.get<std::uint64_t>();
    item_rep_ = in.get_vector<double>();
    item_bias_ = in.get_vector<double>();
    user_emb_ = in.get_vector<double>();
    const std::size_t n_items = catalog_items().size();
    if (item_rep_.size() != n_items * dim_ || item_bias_.size() != n_items ||
        user_emb_.size() != index_.n_users() * dim_) {
      throw IngestError("WarpHybrid archive: state size mismatch");
    }
    compute_user_ranges();
  }

 protected:
  /// Per-user affine rescale of the ranking score onto [1, 5], using the
  /// user's lowest and highest score over the catalog.
  std::optional<double> estimate(UserId user, ItemId item) const override {
    const auto u = index_.user_index(user);
    const auto cat = catalog_items();
    auto it = std::lower_bound(cat.begin(), cat.end(), item);
    if (!u || it == cat.end() || *it != item) return std::nullopt;
    const double s = score(*u, static_cast<std::size_t>(it - cat.begin()));
    const double lo = user_min_[*u];
    const double hi = user_max_[*u];
    if (hi <= lo) return kScaleMidpoint;
    return kMinRating + (kMaxRating - kMinRating) * (s - lo) / (hi - lo);
  }

  std::vector<double> ranking_scores(UserId user, std::span<const ItemId> items) const override {
    const auto u = index_.user_index(user);
    if (!u) return FittedRecommender::ranking_scores(user, items);
    const auto cat = catalog_items();
    std::vector<double> out(items.size());
    for (std::size_t k = 0; k < items.size(); ++k) {
      auto it = std::lower_bound(cat.begin(), cat.end(), items[k]);
      out[k] = (it != cat.end() && *it == items[k])
                   ? score(*u, static_cast<std::size_t>(it - cat.begin()))
                   : -std::numeric_limits<double>::infinity();
    }
    return out;
  }

  void save_state(ArchiveWriter& out) const override {
    out.put<std::uint64_t>(dim_);
    out.put_vector(item_rep_);
    out.put_vector(item_bias_);
    out.put_vector(user_emb_);
  }

 private:
  double score(std::uint32_t u, std::size_t row) const {
    return kernels::dot(std::span<const double>(user_emb_).subspan(u * dim_, dim_),
                        std::span<const double>(item_rep_).subspan(row * dim_, dim_)) +
           item_bias_[row];
  }

  void compute_user_ranges() {
    const std::size_t n_items = catalog_items().size();
    user_min_.assign(index_.n_users(), 0.0);
    user_max_.assign(index_.n_users(), 0.0);
    std::vector<double> scores(n_items);
    const auto& k = kernels::active();
    for (std::uint32_t u = 0; u < index_.n_users(); ++u) {
      k.gemv(item_rep_.data(), n_items, dim_, user_emb_.data() + u * dim_, scores.data());
      for (std::size_t r = 0; r < n_items; ++r) scores[r] += item_bias_[r];
      const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
      user_min_[u] = *lo;
      user_max_[u] = *hi;
    }
  }

  std::size_t dim_ = 0;
  std::vector<double> item_rep_;   // catalog rows x dim
  std::vector<double> item_bias_;  // per catalog row
  std::vector<double> user_emb_;   // training users x dim
  std::vector<double> user_min_;
  std::vector<double> user_max_;
};

}  // namespace

std::unique_ptr<FittedRecommender> fit_warp(const RecommenderSpec& spec,
                                            std::span<const RatingEvent> train,
                                            const ItemCatalog& catalog, std::uint64_t seed) {
  return std::make_unique<WarpHybrid>(spec, train, catalog, seed);
}

std::unique_ptr<FittedRecommender> load_warp(ArchiveReader& in) {
  return std::make_unique<WarpHybrid>(in);
}

}  // namespace metahybrid::detail
