#include "metahybrid/recommenders.hpp"
#include "models.hpp"

namespace metahybrid {
namespace {

constexpr std::string_view kMagic = "MHRC";
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::unique_ptr<FittedRecommender> fit(const RecommenderSpec& spec,
                                       std::span<const RatingEvent> train,
                                       const ItemCatalog& catalog, std::uint64_t seed) {
  validate_spec(spec);
  if (train.empty()) {
    throw InvalidArgument("fit " + std::string(algorithm_name(spec.algorithm)) +
                          ": empty training set");
  }
  switch (spec.algorithm) {
    case Algorithm::BaselineOnly:
      return detail::fit_baseline(spec, train, catalog, seed);
    case Algorithm::SlopeOne:
      return detail::fit_slope_one(spec, train, catalog, seed);
    case Algorithm::CoClustering:
      return detail::fit_co_clustering(spec, train, catalog, seed);
    case Algorithm::SvdMf:
      return detail::fit_svd(spec, train, catalog, seed);
    case Algorithm::KnnBasic:
      return detail::fit_knn(spec, train, catalog, seed);
    case Algorithm::ContentBased:
      return detail::fit_content_based(spec, train, catalog, seed);
    case Algorithm::WarpHybrid:
      return detail::fit_warp(spec, train, catalog, seed);
  }
  throw InvalidArgument("unknown algorithm");
}

std::unique_ptr<FittedRecommender> load_recommender(ArchiveReader& in) {
  // The algorithm tag leads the common block, which the model constructor
  // reads in full.
  const Algorithm algorithm = parse_algorithm(in.peek_string());
  switch (algorithm) {
    case Algorithm::BaselineOnly:
      return detail::load_baseline(in);
    case Algorithm::SlopeOne:
      return detail::load_slope_one(in);
    case Algorithm::CoClustering:
      return detail::load_co_clustering(in);
    case Algorithm::SvdMf:
      return detail::load_svd(in);
    case Algorithm::KnnBasic:
      return detail::load_knn(in);
    case Algorithm::ContentBased:
      return detail::load_content_based(in);
    case Algorithm::WarpHybrid:
      return detail::load_warp(in);
  }
  throw IngestError("unknown algorithm in archive");
}

void save_recommender(const FittedRecommender& model, const std::filesystem::path& path) {
  ArchiveWriter out(kMagic, kVersion);
  model.save(out);
  out.save(path);
}

std::unique_ptr<FittedRecommender> load_recommender(const std::filesystem::path& path) {
  auto in = ArchiveReader::open(path, kMagic, kVersion);
  auto model = load_recommender(in);
  if (!in.at_end()) throw IngestError("recommender archive has trailing data: " + path.string());
  return model;
}

}  // namespace metahybrid
