// r = mu + b_u + b_i with biases fitted by regularized SGD.

#include "models.hpp"

namespace metahybrid::detail {
namespace {

class BaselineOnly final : public FittedRecommender {
 public:
  BaselineOnly(const RecommenderSpec& spec, std::span<const RatingEvent> train,
               const ItemCatalog& catalog, std::uint64_t seed)
      : FittedRecommender(spec, train, catalog, seed),
        user_bias_(index_.n_users(), 0.0),
        item_bias_(index_.n_items(), 0.0) {
    const auto epochs = spec.count_param("epochs");
    const double lr = spec.param("learn_rate");
    const double reg = spec.param("reg");
    const double mu = index_.global_mean();
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      for (const auto& r : index_.ratings()) {
        const auto u = *index_.user_index(r.user);
        const auto i = *index_.item_index(r.item);
        const double err = r.rating - (mu + user_bias_[u] + item_bias_[i]);
        user_bias_[u] += lr * (err - reg * user_bias_[u]);
        item_bias_[i] += lr * (err - reg * item_bias_[i]);
      }
    }
  }

  explicit BaselineOnly(ArchiveReader& in) : FittedRecommender(in) {
    user_bias_ = in.get_vector<double>();
    item_bias_ = in.get_vector<double>();
    if (user_bias_.size() != index_.n_users() || item_bias_.size() != index_.n_items()) {
      throw IngestError("BaselineOnly archive: bias vector size mismatch");
    }
  }

 protected:
  std::optional<double> estimate(UserId user, ItemId item) const override {
    const auto u = index_.user_index(user);
    const auto i = index_.item_index(item);
    if (!u && !i) return std::nullopt;
    return index_.global_mean() + (u ? user_bias_[*u] : 0.0) + (i ? item_bias_[*i] : 0.0);
  }

  void save_state(ArchiveWriter& out) const override {
    out.put_vector(user_bias_);
    out.put_vector(item_bias_);
  }

 private:
  std::vector<double> user_bias_;
  std::vector<double> item_bias_;
};

}  // namespace

std::unique_ptr<FittedRecommender> fit_baseline(const RecommenderSpec& spec,
                                                std::span<const RatingEvent> train,
                                                const ItemCatalog& catalog, std::uint64_t seed) {
  return std::make_unique<BaselineOnly>(spec, train, catalog, seed);
}

std::unique_ptr<FittedRecommender> load_baseline(ArchiveReader& in) {
  return std::make_unique<BaselineOnly>(in);
}

}  // namespace metahybrid::detail
