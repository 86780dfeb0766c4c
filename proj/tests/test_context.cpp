#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "metahybrid/context.hpp"
#include "metahybrid/synth.hpp"

using namespace metahybrid;

namespace {

Dataset tiny() {
  Dataset ds;
  auto item = [&](long id, std::vector<std::string> genres, int year, int runtime) {
    ItemRecord it;
    it.id = ItemId(id);
    it.title = "t";
    it.genres = std::move(genres);
    it.year = year;
    it.runtime_minutes = runtime;
    ds.items.emplace(it.id, it);
  };
  item(1, {"Drama"}, 1990, 100);
  item(2, {"Comedy", "Drama"}, 2000, 200);
  item(3, {"Horror"}, 1980, 50);
  UserRecord u;
  u.id = UserId(1);
  u.gender = Gender::Female;
  u.age_band = 25;
  u.occupation = 4;
  u.location = "90210";
  ds.users.emplace(u.id, u);
  return ds;
}

// 1970-01-06 was a Tuesday; 20:xx UTC.
constexpr std::int64_t kTuesday2000 = 5 * 86400 + 20 * 3600;

}  // namespace

TEST(Extract, RatingHistogramAllFives) {
  const auto ds = tiny();
  std::vector<RatingEvent> s;
  for (int k = 0; k < 4; ++k) s.push_back({UserId(1), ItemId(1), 5, kTuesday2000 + k * 60});
  const auto raw = extract_raw(UserId(1), s, ds);
  EXPECT_EQ(raw.n_ratings, 4u);
  EXPECT_EQ(raw.rating_histogram, (std::array<double, 5>{0, 0, 0, 0, 1}));
  EXPECT_EQ(raw.preferred_hour, 20);
  EXPECT_EQ(raw.preferred_dow, 2);
}

TEST(Extract, GenreHistogramAndEntropy) {
  const auto ds = tiny();
  const RatingEvent s[] = {{UserId(1), ItemId(1), 4, 0}, {UserId(1), ItemId(2), 3, 0}};
  const auto raw = extract_raw(UserId(1), s, ds);
  EXPECT_DOUBLE_EQ(raw.genre_histogram.at("Drama"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(raw.genre_histogram.at("Comedy"), 1.0 / 3.0);
  EXPECT_NEAR(raw.genre_entropy, 0.6365141682948128, 1e-12);
  EXPECT_EQ(raw.n_unique_genres, 2u);
  EXPECT_DOUBLE_EQ(raw.year_variance, 25.0);
  EXPECT_DOUBLE_EQ(raw.mean_runtime_norm, 0.75);
  EXPECT_EQ(raw.location_region, 9);
}

TEST(Extract, EmptySliceIsZeroProfile) {
  const auto raw = extract_raw(UserId(1), {}, tiny());
  EXPECT_EQ(raw.n_ratings, 0u);
  EXPECT_EQ(raw.rating_histogram, (std::array<double, 5>{}));
  EXPECT_FALSE(raw.preferred_hour);
  EXPECT_TRUE(raw.genre_histogram.empty());
  EXPECT_EQ(raw.gender, Gender::Female);
}

TEST(Extract, NormalizedAttributesIgnoreDuplication) {
  const auto ds = tiny();
  std::vector<RatingEvent> s{{UserId(1), ItemId(1), 4, 10}, {UserId(1), ItemId(2), 2, 20}, {UserId(1), ItemId(3), 5, 30}};
  const auto a = extract_raw(UserId(1), s, ds);
  auto doubled = s;
  doubled.insert(doubled.end(), s.begin(), s.end());
  const auto b = extract_raw(UserId(1), doubled, ds);
  EXPECT_EQ(a.rating_histogram, b.rating_histogram);
  EXPECT_EQ(a.genre_histogram, b.genre_histogram);
  EXPECT_DOUBLE_EQ(a.mean_runtime_norm, b.mean_runtime_norm);
}

TEST(ContextModel, SchemaShapeOnFixture) {
  FixtureOptions o;
  o.n_users = 60;
  const auto ds = make_planted_fixture(o);
  std::vector<UserId> users;
  for (const auto& [u, rec] : ds.users) users.push_back(u);
  const auto raw = extract_all(ds, users, ds.ratings);
  const auto model = fit_context_model(raw, ds, ContextConfig{});
  const auto& names = model.feature_names();
  EXPECT_EQ(std::count_if(names.begin(), names.end(), [](const auto& n) { return n.starts_with("hour_"); }), 24);
  EXPECT_EQ(std::count_if(names.begin(), names.end(), [](const auto& n) { return n.starts_with("dow_"); }), 7);
  EXPECT_EQ(std::count_if(names.begin(), names.end(), [](const auto& n) { return n.starts_with("genre_pca_"); }), 10);
  EXPECT_EQ(std::count_if(names.begin(), names.end(), [](const auto& n) { return n.starts_with("keyword_pca_"); }), 15);
  std::set<std::string> unique(names.begin(), names.end());
  EXPECT_EQ(unique.size(), names.size());

  const auto m = assemble_matrix(model, raw);
  EXPECT_EQ(m.values.cols, model.width());
  EXPECT_EQ(m.values.rows, users.size());
  const auto back = ContextMatrix::from_csv(m.to_csv());
  EXPECT_EQ(back.users, m.users);
  EXPECT_EQ(back.values, m.values);
  EXPECT_EQ(back.names, m.names);

  ArchiveWriter w("MHCX", 1);
  model.save(w);
  ArchiveReader r(w.bytes(), "MHCX", 1);
  const auto loaded = ContextModel::load(r);
  EXPECT_EQ(loaded.feature_names(), model.feature_names());
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(loaded.encode(raw[k]), model.encode(raw[k]));
}

TEST(ContextModel, IdenticalSlicesGiveIdenticalRows) {
  auto ds = tiny();
  UserRecord twin = ds.users.at(UserId(1));
  twin.id = UserId(2);
  ds.users.emplace(twin.id, twin);
  const RatingEvent a[] = {{UserId(1), ItemId(1), 4, 0}, {UserId(1), ItemId(3), 1, 0}};
  const RatingEvent b[] = {{UserId(2), ItemId(1), 4, 0}, {UserId(2), ItemId(3), 1, 0}};
  const std::vector<RawContextFeatures> raw{extract_raw(UserId(1), a, ds), extract_raw(UserId(2), b, ds)};
  std::vector<std::string> warnings;
  const auto model = fit_context_model(raw, ds, ContextConfig{}, &warnings);
  EXPECT_FALSE(warnings.empty());  // too few rows for 10 genre components
  EXPECT_EQ(model.encode(raw[0]), model.encode(raw[1]));
}

TEST(ContextModel, AgeBlockCanBeDropped) {
  const auto ds = tiny();
  const RatingEvent a[] = {{UserId(1), ItemId(1), 4, 0}};
  const std::vector<RawContextFeatures> raw{extract_raw(UserId(1), a, ds)};
  ContextConfig c;
  c.include_age = false;
  const auto model = fit_context_model(raw, ds, c);
  for (const auto& n : model.feature_names()) EXPECT_FALSE(n.starts_with("age_"));
}
