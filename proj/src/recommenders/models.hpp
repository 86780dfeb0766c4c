#pragma once

// Internal factory functions, one pair per algorithm.

#include <memory>

#include "metahybrid/recommenders.hpp"

namespace metahybrid::detail {

#define METAHYBRID_DECLARE_MODEL(name)                                                     \
  std::unique_ptr<FittedRecommender> fit_##name(const RecommenderSpec& spec,             \
                                                std::span<const RatingEvent> train,      \
                                                const ItemCatalog& catalog,              \
                                                std::uint64_t seed);                     \
  std::unique_ptr<FittedRecommender> load_##name(ArchiveReader& in);

METAHYBRID_DECLARE_MODEL(baseline)
METAHYBRID_DECLARE_MODEL(slope_one)
METAHYBRID_DECLARE_MODEL(co_clustering)
METAHYBRID_DECLARE_MODEL(svd)
METAHYBRID_DECLARE_MODEL(knn)
METAHYBRID_DECLARE_MODEL(content_based)
METAHYBRID_DECLARE_MODEL(warp)

#undef METAHYBRID_DECLARE_MODEL

}  // namespace metahybrid::detail
