#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metahybrid/archive.hpp"
#include "metahybrid/data.hpp"
#include "metahybrid/matrix.hpp"
#include "metahybrid/pca.hpp"

namespace metahybrid {

/// Per-user attributes before encoding. An empty slice gives the zero
/// profile: counts and histograms zero, preferences and categories unknown.
struct RawContextFeatures {
  UserId user;
  std::size_t n_ratings = 0;
  std::array<double, 5> rating_histogram{};  // fractions of ratings 1..5
  double year_variance = 0.0;                // population variance of release years
  double genre_entropy = 0.0;                // nats, over genre_histogram
  std::size_t n_unique_genres = 0;
  std::map<std::string, double> genre_histogram;    // occurrence fractions
  std::map<std::string, double> keyword_histogram;  // occurrence fractions
  double mean_runtime_norm = 0.0;  // mean runtime / catalog max runtime
  std::optional<int> preferred_hour;  // 0..23, UTC
  std::optional<int> preferred_dow;   // 0..6, 0 = Sunday, UTC
  Gender gender = Gender::Unknown;
  std::optional<int> age_band;
  std::optional<int> occupation;
  std::optional<int> location_region;  // first postal-code digit
};

/// Extracts raw features against one dataset's catalog and demographics.
class ContextExtractor {
 public:
  explicit ContextExtractor(const Dataset& dataset);

  /// `slice` must contain only `user`'s ratings.
  RawContextFeatures extract(UserId user, std::span<const RatingEvent> slice) const;

 private:
  const Dataset* dataset_;
  double max_runtime_ = 0.0;
};

RawContextFeatures extract_raw(UserId user, std::span<const RatingEvent> slice,
                               const Dataset& dataset);

struct ContextConfig {
  std::size_t genre_components = 10;
  std::size_t keyword_components = 15;
  std::size_t keyword_vocab_cap = 2000;
  bool include_age = true;

  void validate() const;
  friend bool operator==(const ContextConfig&, const ContextConfig&) = default;
};

inline constexpr std::array<int, 7> kAgeBands{1, 18, 25, 35, 45, 50, 56};
inline constexpr int kOccupationCodes = 21;

/// Encoding schema plus the genre and keyword PCA models, fitted on the
/// training users of one experiment.
class ContextModel {
 public:
  ContextModel() = default;

  const ContextConfig& config() const { return config_; }
  const std::vector<std::string>& genre_vocabulary() const { return genre_vocab_; }
  const std::vector<std::string>& keyword_vocabulary() const { return keyword_vocab_; }
  const PcaModel& genre_pca() const { return genre_pca_; }
  const PcaModel& keyword_pca() const { return keyword_pca_; }

  /// Column names in vector order.
  const std::vector<std::string>& feature_names() const { return names_; }
  /// Source attribute per column, for summing one-hot blocks.
  const std::vector<std::string>& feature_sources() const { return sources_; }
  std::size_t width() const { return names_.size(); }

  std::vector<double> encode(const RawContextFeatures& raw) const;

  void save(ArchiveWriter& out) const;
  static ContextModel load(ArchiveReader& in);

  friend ContextModel fit_context_model(std::span<const RawContextFeatures>, const Dataset&,
                                        const ContextConfig&, std::vector<std::string>*);

 private:
  void build_schema();

  ContextConfig config_;
  std::vector<std::string> genre_vocab_;
  std::vector<std::string> keyword_vocab_;
  PcaModel genre_pca_;
  PcaModel keyword_pca_;
  std::vector<std::string> names_;
  std::vector<std::string> sources_;
};

/// Fits the PCA models on the training users' histograms. When the data has
/// fewer rows or columns than a configured component count, PCA keeps what
/// fits and the remaining columns stay zero (warned), so the schema width is
/// fixed by the config alone.
ContextModel fit_context_model(std::span<const RawContextFeatures> training_users,
                               const Dataset& dataset, const ContextConfig& config,
                               std::vector<std::string>* warnings = nullptr);

/// Encoded context vectors, one row per user.
struct ContextMatrix {
  std::vector<UserId> users;
  Matrix values;
  std::vector<std::string> names;

  std::span<const double> row_of(UserId user) const;
  std::string to_csv() const;
  static ContextMatrix from_csv(const std::string& text);
};

ContextMatrix assemble_matrix(const ContextModel& model, std::span<const RawContextFeatures> raw);

/// Raw features for each user of `users`, from their ratings in `slice`.
std::vector<RawContextFeatures> extract_all(const Dataset& dataset, std::span<const UserId> users,
                                            std::span<const RatingEvent> slice,
                                            unsigned threads = 0);

}  // namespace metahybrid
