#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metahybrid/common.hpp"

namespace metahybrid {

enum class Gender { Male, Female, Unknown };

struct UserRecord {
  UserId id;
  Gender gender = Gender::Unknown;
  std::optional<int> age_band;    // MovieLens age code (1, 18, 25, ...)
  std::optional<int> occupation;  // MovieLens occupation code 0..20
  std::optional<std::string> location;  // postal code text

  friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

/// Catalog entry. Fields the sources did not provide stay empty optionals;
/// nothing is zero-coded at ingestion.
struct ItemRecord {
  ItemId id;
  std::string title;
  std::optional<int> year;
  std::vector<std::string> genres;    // sorted, unique
  std::vector<std::string> keywords;  // sorted, unique
  std::vector<std::string> cast;      // billing order
  std::optional<int> runtime_minutes;
  std::optional<std::string> language;
  std::optional<double> budget;
  std::optional<double> profit;
  std::optional<double> vote_average;  // ingested, not used by any stage
  std::optional<std::string> plot;

  friend bool operator==(const ItemRecord&, const ItemRecord&) = default;
};

struct Dataset {
  std::vector<RatingEvent> ratings;  // sorted by (user, timestamp, item)
  std::map<ItemId, ItemRecord> items;
  std::map<UserId, UserRecord> users;
  std::string provenance;

  /// Restores the rating order invariant.
  void normalize();

  /// Throws InvalidArgument naming the first violated invariant.
  void validate() const;

  /// Ratings grouped per user, in dataset order.
  std::map<UserId, std::vector<RatingEvent>> ratings_by_user() const;

  void append_provenance(const std::string& step);
};

struct LoadOptions {
  /// Malformed lines tolerated before ingestion fails.
  std::size_t malformed_tolerance = 0;
};

struct IngestReport {
  std::size_t lines_read = 0;
  std::size_t malformed_lines = 0;
  std::vector<std::string> warnings;
};

/// MovieLens 1M layout: `UserID::MovieID::Rating::Timestamp`,
/// `UserID::Gender::Age::Occupation::Zip`, `MovieID::Title (Year)::G1|G2`.
Dataset load_movielens(const std::filesystem::path& ratings_path,
                       const std::filesystem::path& users_path,
                       const std::filesystem::path& items_path, const LoadOptions& options = {},
                       IngestReport* report = nullptr);

/// Comma-separated ratings with header `user,item,rating,timestamp`. Users and
/// items are created as bare records with unknown attributes.
Dataset load_generic_ratings(const std::filesystem::path& ratings_path,
                             const LoadOptions& options = {}, IngestReport* report = nullptr);

struct EnrichmentReport {
  std::size_t matched_by_id = 0;
  std::size_t matched_by_title = 0;
  std::size_t unmatched_items = 0;
  std::size_t distinct_keywords = 0;
  std::vector<std::string> warnings;

  double match_rate(std::size_t n_items) const {
    return n_items == 0 ? 0.0
                        : static_cast<double>(matched_by_id + matched_by_title) /
                              static_cast<double>(n_items);
  }
};

/// Tab-separated metadata with header; columns item_id, title, year,
/// keywords, runtime, cast, language, budget, profit, plot and optionally
/// vote_average. Rows match by item_id first, then by case-insensitive exact
/// title with year within one.
Dataset enrich_items(Dataset dataset, const std::filesystem::path& metadata_path,
                     EnrichmentReport* report = nullptr);

/// Keeps, for every user with n >= min_keep ratings, the m chronologically
/// earliest ratings, m uniform in [min_keep, min(max_keep, n)].
Dataset induce_cold_start(Dataset dataset, std::uint64_t seed, std::size_t min_keep,
                          std::optional<std::size_t> max_keep = std::nullopt);

/// Drops users with fewer than k ratings. Items left without ratings are kept
/// unless prune_items is set.
Dataset filter_min_ratings(Dataset dataset, std::size_t k, bool prune_items = false);

/// Sorted, tab-delimited text; byte-identical for equal datasets.
std::string write_canonical(const Dataset& dataset);
Dataset read_canonical(const std::string& text);

/// Distinct keyword count across the catalog.
std::size_t distinct_keyword_count(const Dataset& dataset);

/// Splits "Title (1995)" into title and year.
std::pair<std::string, std::optional<int>> split_title_year(const std::string& raw);

}  // namespace metahybrid
