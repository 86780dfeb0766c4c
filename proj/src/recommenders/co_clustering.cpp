// Co-clustering collaborative filter. Users and items are assigned to
// clusters; the estimate for (u, i) with clusters (c, d) is
//   A(c, d) + (mean_u - A_user(c)) + (mean_i - A_item(d))
// where A are the rating averages of the co-cluster, user cluster and item
// cluster. Each epoch reassigns users, then items, to the cluster minimizing
// their squared training error.

#include <algorithm>
#include <cmath>
#include <limits>

#include "metahybrid/rng.hpp"
#include "models.hpp"

namespace metahybrid::detail {
namespace {

using Postings = std::span<const TrainingIndex::Entry>;

/// Squared distance between two mean-centered sparse rows.
double centered_distance(Postings a, double mean_a, Postings b, double mean_b) {
  double d = 0.0;
  std::size_t x = 0, y = 0;
  while (x < a.size() || y < b.size()) {
    if (y == b.size() || (x < a.size() && a[x].index < b[y].index)) {
      const double v = a[x++].rating - mean_a;
      d += v * v;
    } else if (x == a.size() || b[y].index < a[x].index) {
      const double v = b[y++].rating - mean_b;
      d += v * v;
    } else {
      const double v = (a[x++].rating - mean_a) - (b[y++].rating - mean_b);
      d += v * v;
    }
  }
  return d;
}

/// k-means++ seeding over sparse rows, then nearest-seed assignment (ties to
/// the lowest cluster index).
template <typename RowFn, typename MeanFn>
std::vector<std::uint32_t> seed_clusters(std::size_t n_rows, std::size_t k, RowFn row, MeanFn mean,
                                         Rng& rng) {
  std::vector<std::uint32_t> assign(n_rows, 0);
  if (n_rows == 0) return assign;
  k = std::min(k, n_rows);
  std::vector<std::size_t> seeds{rng.index(n_rows)};
  std::vector<double> nearest(n_rows, std::numeric_limits<double>::infinity());
  while (seeds.size() < k) {
    const std::size_t last = seeds.back();
    double total = 0.0;
    for (std::size_t r = 0; r < n_rows; ++r) {
      nearest[r] = std::min(nearest[r], centered_distance(row(r), mean(r), row(last), mean(last)));
      total += nearest[r];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (pick = 0; pick + 1 < n_rows; ++pick) {
        target -= nearest[pick];
        if (target < 0.0 && nearest[pick] > 0.0) break;
      }
    } else {
      pick = rng.index(n_rows);
    }
    seeds.push_back(pick);
  }
  for (std::size_t r = 0; r < n_rows; ++r) {
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t c = 0; c < seeds.size(); ++c) {
      const double d = centered_distance(row(r), mean(r), row(seeds[c]), mean(seeds[c]));
      if (d < best) {
        best = d;
        assign[r] = c;
      }
    }
  }
  return assign;
}

class CoClustering final : public FittedRecommender {
 public:
  CoClustering(const RecommenderSpec& spec, std::span<const RatingEvent> train,
               const ItemCatalog& catalog, std::uint64_t seed)
      : FittedRecommender(spec, train, catalog, seed),
        n_user_clusters_(spec.count_param("user_clusters")),
        n_item_clusters_(spec.count_param("item_clusters")) {
    Rng rng(seed);
    const auto& ix = index_;
    user_cluster_ = seed_clusters(
        ix.n_users(), n_user_clusters_, [&](std::size_t u) { return ix.user_ratings(static_cast<std::uint32_t>(u)); },
        [&](std::size_t u) { return ix.user_mean(static_cast<std::uint32_t>(u)); }, rng);
    item_cluster_ = seed_clusters(
        ix.n_items(), n_item_clusters_, [&](std::size_t i) { return ix.item_ratings(static_cast<std::uint32_t>(i)); },
        [&](std::size_t i) { return ix.item_mean(static_cast<std::uint32_t>(i)); }, rng);

    const auto epochs = spec.count_param("epochs");
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      compute_averages();
      for (std::uint32_t u = 0; u < ix.n_users(); ++u) {
        user_cluster_[u] = best_cluster(n_user_clusters_, [&](std::uint32_t c) {
          double err = 0.0;
          for (const auto& e : ix.user_ratings(u)) {
            const double d = e.rating - formula(c, item_cluster_[e.index], ix.user_mean(u),
                                                ix.item_mean(e.index));
            err += d * d;
          }
          return err;
        });
      }
      compute_averages();
      for (std::uint32_t i = 0; i < ix.n_items(); ++i) {
        item_cluster_[i] = best_cluster(n_item_clusters_, [&](std::uint32_t d) {
          double err = 0.0;
          for (const auto& e : ix.item_ratings(i)) {
            const double r = e.rating - formula(user_cluster_[e.index], d, ix.user_mean(e.index),
                                                ix.item_mean(i));
            err += r * r;
          }
          return err;
        });
      }
    }
    compute_averages();
  }

  explicit CoClustering(ArchiveReader& in) : FittedRecommender(in) {
    n_user_clusters_ = in.get<std::uint64_t>();
    n_item_clusters_ = in.get<std::uint64_t>();
    user_cluster_ = in.get_vector<std::uint32_t>();
    item_cluster_ = in.get_vector<std::uint32_t>();
    user_avg_ = in.get_vector<double>();
    item_avg_ = in.get_vector<double>();
    cocluster_avg_ = in.get_vector<double>();
    if (user_cluster_.size() != index_.n_users() || item_cluster_.size() != index_.n_items() ||
        user_avg_.size() != n_user_clusters_ || item_avg_.size() != n_item_clusters_ ||
        cocluster_avg_.size() != n_user_clusters_ * n_item_clusters_) {
      throw IngestError("CoClustering archive: state size mismatch");
    }
  }

 protected:
  std::optional<double> estimate(UserId user, ItemId item) const override {
    const auto u = index_.user_index(user);
    const auto i = index_.item_index(item);
    if (!u || !i) return std::nullopt;
    return formula(user_cluster_[*u], item_cluster_[*i], index_.user_mean(*u), index_.item_mean(*i));
  }

  void save_state(ArchiveWriter& out) const override {
    out.put<std::uint64_t>(n_user_clusters_);
    out.put<std::uint64_t>(n_item_clusters_);
    out.put_vector(user_cluster_);
    out.put_vector(item_cluster_);
    out.put_vector(user_avg_);
    out.put_vector(item_avg_);
    out.put_vector(cocluster_avg_);
  }

 private:
  double formula(std::uint32_t c, std::uint32_t d, double user_mean, double item_mean) const {
    return cocluster_avg_[c * n_item_clusters_ + d] + (user_mean - user_avg_[c]) +
           (item_mean - item_avg_[d]);
  }

  template <typename ErrFn>
  static std::uint32_t best_cluster(std::size_t k, ErrFn err) {
    std::uint32_t best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::uint32_t c = 0; c < k; ++c) {
      const double e = err(c);
      if (e < best_err) {
        best_err = e;
        best = c;
      }
    }
    return best;
  }

  /// Cluster averages; empty clusters fall back to the global mean.
  void compute_averages() {
    const double mu = index_.global_mean();
    std::vector<double> us(n_user_clusters_, 0.0), is(n_item_clusters_, 0.0),
        cs(n_user_clusters_ * n_item_clusters_, 0.0);
    std::vector<std::size_t> un(us.size(), 0), in(is.size(), 0), cn(cs.size(), 0);
    for (std::uint32_t u = 0; u < index_.n_users(); ++u) {
      const auto c = user_cluster_[u];
      for (const auto& e : index_.user_ratings(u)) {
        const auto d = item_cluster_[e.index];
        us[c] += e.rating;
        ++un[c];
        is[d] += e.rating;
        ++in[d];
        cs[c * n_item_clusters_ + d] += e.rating;
        ++cn[c * n_item_clusters_ + d];
      }
    }
    auto finish = [mu](std::vector<double>& sum, const std::vector<std::size_t>& n) {
      for (std::size_t k = 0; k < sum.size(); ++k) {
        sum[k] = n[k] ? sum[k] / static_cast<double>(n[k]) : mu;
      }
    };
    finish(us, un);
    finish(is, in);
    finish(cs, cn);
    user_avg_ = std::move(us);
    item_avg_ = std::move(is);
    cocluster_avg_ = std::move(cs);
  }

  std::size_t n_user_clusters_ = 0;
  std::size_t n_item_clusters_ = 0;
  std::vector<std::uint32_t> user_cluster_;
  std::vector<std::uint32_t> item_cluster_;
  std::vector<double> user_avg_;
  std::vector<double> item_avg_;
  std::vector<double> cocluster_avg_;
};

}  // namespace

std::unique_ptr<FittedRecommender> fit_co_clustering(const RecommenderSpec& spec,
                                                     std::span<const RatingEvent> train,
                                                     const ItemCatalog& catalog,
                                                     std::uint64_t seed) {
  return std::make_unique<CoClustering>(spec, train, catalog, seed);
}

std::unique_ptr<FittedRecommender> load_co_clustering(ArchiveReader& in) {
  return std::make_unique<CoClustering>(in);
}

}  // namespace metahybrid::detail
