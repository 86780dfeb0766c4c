#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "metahybrid/data.hpp"

namespace metahybrid {

/// Two planted user populations, tied to gender:
///  - genre loyalists (F) rate most of one favourite genre high and a few
///    random titles low;
///  - mainstream users (M) rate a shared pool of blockbusters by quality and
///    some random titles lukewarm.
/// Item keywords are correlated with the item's primary genre.
struct FixtureOptions {
  std::size_t n_users = 200;
  std::size_t n_items = 500;
  std::size_t n_blockbusters = 40;
  std::size_t min_ratings = 20;
  std::size_t max_ratings = 40;
  std::uint64_t seed = 7;
};

Dataset make_planted_fixture(const FixtureOptions& options = {});

/// Writes `dataset` as MovieLens files (ratings.dat, users.dat, movies.dat)
/// plus a metadata TSV (metadata.tsv) carrying keywords and runtimes.
void write_movielens_files(const Dataset& dataset, const std::filesystem::path& dir);

/// Observed entries of r = 3 + u . v + noise for a users x items matrix with
/// factor rank `rank`; each entry observed with probability `observed`.
struct LowRankOptions {
  std::size_t n_users = 50;
  std::size_t n_items = 40;
  std::size_t rank = 2;
  double observed = 0.3;
  double noise = 0.1;
  std::uint64_t seed = 11;
};

std::vector<RatingEvent> make_low_rank_ratings(const LowRankOptions& options = {});

}  // namespace metahybrid
