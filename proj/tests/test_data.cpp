#include <gtest/gtest.h>

#include <filesystem>

#include "metahybrid/archive.hpp"
#include "metahybrid/data.hpp"
#include "metahybrid/synth.hpp"

using namespace metahybrid;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::path(METAHYBRID_SCRATCH_DIR) / "data" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const fs::path kFixture = METAHYBRID_FIXTURE_DIR;

}  // namespace

TEST(TitleYear, SplitsTrailingYear) {
  EXPECT_EQ(split_title_year("Toy Story (1995)"), (std::pair<std::string, std::optional<int>>{"Toy Story", 1995}));
  EXPECT_EQ(split_title_year("No Year").second, std::nullopt);
  EXPECT_EQ(split_title_year("City of Lost Children, The (Cité des enfants perdus, La) (1995)").second, 1995);
}

TEST(MovieLens, LoadsShippedFixture) {
  IngestReport rep;
  const auto ds = load_movielens(kFixture / "ratings.dat", kFixture / "users.dat", kFixture / "movies.dat", {}, &rep);
  EXPECT_EQ(ds.users.size(), 200u);
  EXPECT_EQ(ds.items.size(), 500u);
  EXPECT_EQ(rep.malformed_lines, 0u);
  EXPECT_FALSE(ds.items.at(ItemId(1)).genres.empty());
  EXPECT_NO_THROW(ds.validate());
}

TEST(MovieLens, MalformedLinesRespectTolerance) {
  const auto dir = scratch("malformed");
  write_file(dir / "ratings.dat", "1::1::5::100\nbroken line\n1::2::9::101\n");
  write_file(dir / "users.dat", "1::F::25::3::12345\n");
  write_file(dir / "movies.dat", "1::A (1990)::Drama\n2::B (1991)::Comedy\n");
  EXPECT_THROW(load_movielens(dir / "ratings.dat", dir / "users.dat", dir / "movies.dat"), IngestError);
  IngestReport rep;
  const auto ds = load_movielens(dir / "ratings.dat", dir / "users.dat", dir / "movies.dat",
                                 {.malformed_tolerance = 2}, &rep);
  EXPECT_EQ(rep.malformed_lines, 2u);
  EXPECT_EQ(ds.ratings.size(), 1u);
}

TEST(Generic, HeaderAndBareRecords) {
  const auto dir = scratch("generic");
  write_file(dir / "r.csv", "user,item,rating,timestamp\n7,3,4,10\n7,4,2,11\n8,3,5,12\n");
  const auto ds = load_generic_ratings(dir / "r.csv");
  EXPECT_EQ(ds.users.size(), 2u);
  EXPECT_EQ(ds.items.size(), 2u);
  EXPECT_EQ(ds.users.at(UserId(7)).gender, Gender::Unknown);
}

TEST(Canonical, RoundTripsExactly) {
  FixtureOptions o;
  o.n_users = 30;
  o.n_items = 80;
  const auto ds = make_planted_fixture(o);
  const auto text = write_canonical(ds);
  const auto back = read_canonical(text);
  EXPECT_EQ(back.ratings, ds.ratings);
  EXPECT_EQ(back.items, ds.items);
  EXPECT_EQ(back.users, ds.users);
  EXPECT_EQ(write_canonical(back), text);
}

TEST(Enrichment, FixtureMetadataMatchesById) {
  EnrichmentReport rep;
  auto ds = load_movielens(kFixture / "ratings.dat", kFixture / "users.dat", kFixture / "movies.dat");
  ds = enrich_items(std::move(ds), kFixture / "metadata.tsv", &rep);
  EXPECT_EQ(rep.matched_by_id, 500u);
  EXPECT_EQ(rep.unmatched_items, 0u);
  EXPECT_TRUE(ds.items.at(ItemId(1)).runtime_minutes.has_value());
  EXPECT_EQ(ds.items.at(ItemId(1)).keywords.size(), 5u);
  EXPECT_EQ(distinct_keyword_count(ds), rep.distinct_keywords);
}

TEST(ColdStart, KeepsEarliestRatings) {
  FixtureOptions o;
  o.n_users = 20;
  o.n_items = 60;
  const auto ds = make_planted_fixture(o);
  const auto cold = induce_cold_start(ds, 5, 3, 6);
  const auto before = ds.ratings_by_user();
  for (const auto& [u, events] : cold.ratings_by_user()) {
    EXPECT_GE(events.size(), 3u);
    EXPECT_LE(events.size(), 6u);
    const auto& orig = before.at(u);
    for (std::size_t k = 0; k < events.size(); ++k) EXPECT_EQ(events[k], orig[k]);
  }
  EXPECT_EQ(write_canonical(cold), write_canonical(induce_cold_start(ds, 5, 3, 6)));
}

TEST(Filter, DropsLightUsers) {
  FixtureOptions o;
  o.n_users = 20;
  o.n_items = 60;
  const auto ds = make_planted_fixture(o);
  const auto f = filter_min_ratings(ds, 30);
  for (const auto& [u, events] : f.ratings_by_user()) EXPECT_GE(events.size(), 30u);
  EXPECT_LT(f.users.size(), ds.users.size());
}

TEST(Validate, RejectsUnknownItem) {
  Dataset ds;
  UserRecord u;
  u.id = UserId(1);
  ds.users.emplace(u.id, u);
  ds.ratings.push_back({UserId(1), ItemId(9), 3.0, 0});
  EXPECT_THROW(ds.validate(), InvalidArgument);
}

TEST(Archive, RejectsWrongMagic) {
  ArchiveWriter w("ABCD", 1);
  w.put<double>(1.5);
  EXPECT_THROW(ArchiveReader(w.bytes(), "WXYZ", 1), IngestError);
  EXPECT_THROW(ArchiveReader(w.bytes(), "ABCD", 2), IngestError);
  ArchiveReader r(w.bytes(), "ABCD", 1);
  EXPECT_EQ(r.get<double>(), 1.5);
  EXPECT_TRUE(r.at_end());
  EXPECT_THROW(r.get<double>(), IngestError);
}

TEST(Archive, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
