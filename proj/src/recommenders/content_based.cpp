// Content-based recommender. Items are L2-normalized one-hot vectors over
// genres and keywords; a user profile is the rating-weighted centroid of the
// rated items' vectors; the estimate maps cosine similarity in [0, 1] onto the
// rating scale as 1 + 4 * cos.

#include <algorithm>
#include <cmath>
#include <map>

#include "models.hpp"

namespace metahybrid::detail {
namespace {

struct SparseRows {
  std::vector<std::uint64_t> offsets{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> values;

  std::size_t rows() const { return offsets.size() - 1; }
  void push(const std::vector<std::pair<std::uint32_t, double>>& row) {
    for (const auto& [c, v] : row) {
      cols.push_back(c);
      values.push_back(v);
    }
    offsets.push_back(cols.size());
  }
  double dot(std::size_t a, const SparseRows& other, std::size_t b) const {
    double s = 0.0;
    auto x = offsets[a], xe = offsets[a + 1];
    auto y = other.offsets[b], ye = other.offsets[b + 1];
    while (x < xe && y < ye) {
      if (cols[x] < other.cols[y]) {
        ++x;
      } else if (other.cols[y] < cols[x]) {
        ++y;
      } else {
        s += values[x++] * other.values[y++];
      }
    }
    return s;
  }
  double norm(std::size_t a) const {
    double s = 0.0;
    for (auto k = offsets[a]; k < offsets[a + 1]; ++k) s += values[k] * values[k];
    return std::sqrt(s);
  }
  void save(ArchiveWriter& out) const {
    out.put_vector(offsets);
    out.put_vector(cols);
    out.put_vector(values);
  }
  static SparseRows load(ArchiveReader& in) {
    SparseRows r;
    r.offsets = in.get_vector<std::uint64_t>();
    r.cols = in.get_vector<std::uint32_t>();
    r.values = in.get_vector<double>();
    if (r.offsets.empty() || r.offsets.back() != r.cols.size() || r.cols.size() != r.values.size()) {
      throw IngestError("ContentBased archive: malformed sparse rows");
    }
    return r;
  }
};

class ContentBased final : public FittedRecommender {
 public:
  ContentBased(const RecommenderSpec& spec, std::span<const RatingEvent> train,
               const ItemCatalog& catalog, std::uint64_t seed)
      : FittedRecommender(spec, train, catalog, seed) {
    if (!catalog.has_features()) {
      throw InvalidArgument("fit ContentBased: catalog carries no item features");
    }
    std::map<std::string, std::uint32_t> vocab;
    for (ItemId id : catalog_items()) {
      if (const auto* f = catalog.features(id)) {
        for (const auto& g : f->genres) vocab.emplace("g:" + g, 0);
        for (const auto& k : f->keywords) vocab.emplace("k:" + k, 0);
      }
    }
    std::uint32_t next = 0;
    for (auto& [name, idx] : vocab) idx = next++;
    dims_ = vocab.size();

    for (ItemId id : catalog_items()) {
      std::vector<std::pair<std::uint32_t, double>> row;
      if (const auto* f = catalog.features(id)) {
        for (const auto& g : f->genres) row.emplace_back(vocab.at("g:" + g), 1.0);
        for (const auto& k : f->keywords) row.emplace_back(vocab.at("k:" + k), 1.0);
      }
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      const double w = row.empty() ? 0.0 : 1.0 / std::sqrt(static_cast<double>(row.size()));
      for (auto& e : row) e.second = w;
      items_.push(row);
    }

    std::vector<double> dense(dims_, 0.0);
    for (std::uint32_t u = 0; u < index_.n_users(); ++u) {
      std::fill(dense.begin(), dense.end(), 0.0);
      double weight = 0.0;
      for (const auto& e : index_.user_ratings(u)) {
        const std::size_t row = catalog_row(index_.item_at(e.index));
        for (auto k = items_.offsets[row]; k < items_.offsets[row + 1]; ++k) {
          dense[items_.cols[k]] += e.rating * items_.values[k];
        }
        weight += e.rating;
      }
      std::vector<std::pair<std::uint32_t, double>> profile;
      for (std::uint32_t d = 0; d < dims_; ++d) {
        if (dense[d] != 0.0) profile.emplace_back(d, dense[d] / weight);
      }
      profiles_.push(profile);
    }
  }

  explicit ContentBased(ArchiveReader& in) : FittedRecommender(in) {
    dims_ = in.get<std::uint64_t>();
    items_ = SparseRows::load(in);
    profiles_ = SparseRows::load(in);
    if (items_.rows() != catalog_items().size() || profiles_.rows() != index_.n_users()) {
      throw IngestError("ContentBased archive: row count mismatch");
    }
  }

 protected:
  std::optional<double> estimate(UserId user, ItemId item) const override {
    const auto u = index_.user_index(user);
    if (!u) return std::nullopt;
    const std::size_t row = catalog_row(item);
    if (row == catalog_items().size()) return std::nullopt;
    const double pn = profiles_.norm(*u);
    const double in = items_.norm(row);
    if (pn <= 0.0 || in <= 0.0) return std::nullopt;
    const double cos = std::clamp(profiles_.dot(*u, items_, row) / (pn * in), 0.0, 1.0);
    return 1.0 + 4.0 * cos;
  }

  void save_state(ArchiveWriter& out) const override {
    out.put<std::uint64_t>(dims_);
    items_.save(out);
    profiles_.save(out);
  }

 private:
  /// Position of `item` in catalog_items(), or its size when absent.
  std::size_t catalog_row(ItemId item) const {
    const auto cat = catalog_items();
    auto it = std::lower_bound(cat.begin(), cat.end(), item);
    if (it == cat.end() || *it != item) return cat.size();
    return static_cast<std::size_t>(it - cat.begin());
  }

  std::size_t dims_ = 0;
  SparseRows items_;     // one row per catalog item
  SparseRows profiles_;  // one row per training user
};

}  // namespace

std::unique_ptr<FittedRecommender> fit_content_based(const RecommenderSpec& spec,
                                                     std::span<const RatingEvent> train,
                                                     const ItemCatalog& catalog,
                                                     std::uint64_t seed) {
  return std::make_unique<ContentBased>(spec, train, catalog, seed);
}

std::unique_ptr<FittedRecommender> load_content_based(ArchiveReader& in) {
  return std::make_unique<ContentBased>(in);
}

}  // namespace metahybrid::detail
