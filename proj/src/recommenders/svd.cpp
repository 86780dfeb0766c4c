// Biased matrix factorization: r = mu + b_u + b_i + p_u . q_i, fitted by SGD
// over a per-epoch shuffled rating order.

#include <numeric>

#include "metahybrid/kernels.hpp"
#include "metahybrid/rng.hpp"
#include "models.hpp"

namespace metahybrid::detail {
namespace {

class SvdMf final : public FittedRecommender {
 public:
  SvdMf(const RecommenderSpec& spec, std::span<const RatingEvent> train, const ItemCatalog& catalog,
        std::uint64_t seed)
      : FittedRecommender(spec, train, catalog, seed), factors_(spec.count_param("factors")) {
    const auto epochs = spec.count_param("epochs");
    const double lr = spec.param("learn_rate");
    const double reg = spec.param("reg");
    const double init_std = spec.param("init_std");

    Rng rng(seed);
    user_bias_.assign(index_.n_users(), 0.0);
    item_bias_.assign(index_.n_items(), 0.0);
    p_.resize(index_.n_users() * factors_);
    q_.resize(index_.n_items() * factors_);
    for (auto& v : p_) v = rng.normal(0.0, init_std);
    for (auto& v : q_) v = rng.normal(0.0, init_std);

    struct Triple {
      std::uint32_t u, i;
      double r;
    };
    std::vector<Triple> triples;
    triples.reserve(index_.n_ratings());
    for (const auto& r : index_.ratings()) {
      triples.push_back({*index_.user_index(r.user), *index_.item_index(r.item), r.rating});
    }

    const double mu = index_.global_mean();
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      rng.shuffle(triples);
      for (const auto& t : triples) {
        auto pu = user_row(t.u);
        auto qi = item_row(t.i);
        const double err =
            t.r - (mu + user_bias_[t.u] + item_bias_[t.i] + kernels::dot(pu, qi));
        user_bias_[t.u] += lr * (err - reg * user_bias_[t.u]);
        item_bias_[t.i] += lr * (err - reg * item_bias_[t.i]);
        kernels::sgd_pair(pu, qi, err, lr, reg);
      }
    }
  }

  explicit SvdMf(ArchiveReader& in) : FittedRecommender(in) {
    factors_ = in.get<std::uint64_t>();
    user_bias_ = in.get_vector<double>();
    item_bias_ = in.get_vector<double>();
    p_ = in.get_vector<double>();
    q_ = in.get_vector<double>();
    if (user_bias_.size() != index_.n_users() || item_bias_.size() != index_.n_items() ||
        p_.size() != index_.n_users() * factors_ || q_.size() != index_.n_items() * factors_) {
      throw IngestError("SvdMf archive: state size mismatch");
    }
  }

 protected:
  std::optional<double> estimate(UserId user, ItemId item) const override {
    const auto u = index_.user_index(user);
    const auto i = index_.item_index(item);
    double est = index_.global_mean();
    if (u) est += user_bias_[*u];
    if (i) est += item_bias_[*i];
    if (u && i) {
      est += kernels::dot(std::span<const double>(p_).subspan(*u * factors_, factors_),
                          std::span<const double>(q_).subspan(*i * factors_, factors_));
    }
    if (!u && !i) return std::nullopt;
    return est;
  }

  void save_state(ArchiveWriter& out) const override {
    out.put<std::uint64_t>(factors_);
    out.put_vector(user_bias_);
    out.put_vector(item_bias_);
    out.put_vector(p_);
    out.put_vector(q_);
  }

 private:
  std::span<double> user_row(std::uint32_t u) {
    return std::span<double>(p_).subspan(u * factors_, factors_);
  }
  std::span<double> item_row(std::uint32_t i) {
    return std::span<double>(q_).subspan(i * factors_, factors_);
  }

  std::size_t factors_ = 0;
  std::vector<double> user_bias_;
  std::vector<double> item_bias_;
  std::vector<double> p_;  // n_users x factors, row-major
  std::vector<double> q_;  // n_items x factors, row-major
};

}  // namespace

std::unique_ptr<FittedRecommender> fit_svd(const RecommenderSpec& spec,
                                           std::span<const RatingEvent> train,
                                           const ItemCatalog& catalog, std::uint64_t seed) {
  return std::make_unique<SvdMf>(spec, train, catalog, seed);
}

std::unique_ptr<FittedRecommender> load_svd(ArchiveReader& in) { return std::make_unique<SvdMf>(in); }

}  // namespace metahybrid::detail
