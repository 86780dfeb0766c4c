#include <gtest/gtest.h>

#include <cstdlib>

#include "json.hpp"
#include "metahybrid/config.hpp"
#include "metahybrid/report.hpp"

using namespace metahybrid;

namespace {

const char* kMinimal = R"({
  "schema_version": 1,
  "dataset": {"format": "movielens", "ratings": "r.dat", "users": "u.dat", "items": "m.dat"}
})";

std::string with(const std::string& key_json) {
  auto j = nlohmann::json::parse(kMinimal);
  j.merge_patch(nlohmann::json::parse(key_json));
  return j.dump();
}

}  // namespace

TEST(Config, DefaultsAndPathResolution) {
  const auto c = parse_config(kMinimal, "/data/exp");
  EXPECT_EQ(c.dataset.ratings, std::filesystem::path("/data/exp/r.dat"));
  EXPECT_EQ(c.candidates.names(), CandidateSet::preset("cf").names());
  EXPECT_EQ(c.inner_ratios, (std::vector<double>{0.6, 0.7, 0.8, 0.9}));
  EXPECT_EQ(c.relevance.ndcg_cutoff, 10u);
  EXPECT_EQ(c.forest.n_estimators, 500u);
  EXPECT_EQ(c.seed, 42u);
}

TEST(Config, RejectsUnknownKeysWithPath) {
  try {
    parse_config(with(R"({"forest": {"max_leaves": 3}})"), "/");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("forest.max_leaves"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config(with(R"({"colour": 1})"), "/"), InvalidArgument);
}

TEST(Config, RejectsBadSchemaVersionAndValues) {
  EXPECT_THROW(parse_config(with(R"({"schema_version": 2})"), "/"), InvalidArgument);
  EXPECT_THROW(parse_config(with(R"({"split": {"outer_train_ratio": 1.5}})"), "/"), InvalidArgument);
  EXPECT_THROW(parse_config(with(R"({"candidates": {"preset": "best"}})"), "/"), InvalidArgument);
  EXPECT_THROW(parse_config("{not json", "/"), InvalidArgument);
}

TEST(Config, ExplicitCandidatesWithParams) {
  const auto c = parse_config(with(R"({"candidates": {"list": [
      {"name": "svd8", "algorithm": "SvdMf", "params": {"factors": 8}},
      {"name": "base", "algorithm": "BaselineOnly"}]}})"), "/");
  EXPECT_EQ(c.candidates.names(), (std::vector<std::string>{"svd8", "base"}));
  EXPECT_EQ(c.candidates[0].spec.count_param("factors"), 8u);
  EXPECT_TRUE(c.preset.empty());
  EXPECT_THROW(parse_config(with(R"({"candidates": {"list": [
      {"name": "a", "algorithm": "SvdMf", "params": {"rank": 8}},
      {"name": "b", "algorithm": "BaselineOnly"}]}})"), "/"), InvalidArgument);
}

TEST(Config, OverridesApplyAndRevalidate) {
  auto c = parse_config(kMinimal, "/");
  ConfigOverrides o;
  o.seed = 7;
  o.inner_ratio = 0.6;
  o.preset = "mixed";
  o.ndcg_cutoff = 5;
  apply_overrides(c, o);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.inner_ratios, std::vector<double>{0.6});
  EXPECT_EQ(c.candidates.names(), CandidateSet::preset("mixed").names());
  EXPECT_EQ(c.relevance.ndcg_cutoff, 5u);
  ConfigOverrides bad;
  bad.inner_ratio = 1.0;
  EXPECT_THROW(apply_overrides(c, bad), InvalidArgument);
}

TEST(Config, EnvironmentOverrides) {
  ::setenv("METAHYBRID_SEED", "99", 1);
  ::setenv("METAHYBRID_THREADS", "3", 1);
  const auto o = overrides_from_env();
  ::unsetenv("METAHYBRID_SEED");
  ::unsetenv("METAHYBRID_THREADS");
  EXPECT_EQ(o.seed, 99u);
  EXPECT_EQ(o.threads, 3u);
  ::setenv("METAHYBRID_SEED", "x", 1);
  EXPECT_THROW(overrides_from_env(), InvalidArgument);
  ::unsetenv("METAHYBRID_SEED");
}

TEST(Config, RatioTag) {
  EXPECT_EQ(ratio_tag(0.8), "r80");
  EXPECT_EQ(ratio_tag(0.6), "r60");
}

TEST(Report, JsonRoundTripAndText) {
  ExperimentReport r;
  r.inner_ratio = 0.8;
  r.seed = 4;
  r.candidates = {"A", "B"};
  for (const char* n : {"A", "B", kHybridRow, kOracleRow}) {
    r.rows.push_back({n, {3, 5, 10}, {0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}, 0.123456789, 1.1, 10, 40});
  }
  r.label_histogram = {3, 4};
  r.labeled_users = 7;
  r.confusion = {{2, 1}, {0, 3}};
  r.classifier_accuracy = 5.0 / 6.0;
  r.oob_error = 0.25;
  r.importances = {{"gender_F", 0.6}, {"n_ratings", 0.4}};
  r.grouped_importances = {{"gender", 0.6}, {"n_ratings", 0.4}};
  r.activity.push_back({"Q1", 3, 1, 5, 2.5, {1, 2, 3, 4}});
  r.evaluated_users = 6;
  r.warnings = {"something"};
  const auto back = report_from_json(report_to_json(r));
  EXPECT_EQ(back, r);
  const ExperimentReport runs[] = {r};
  const auto text = render_text(runs);
  for (const char* h : {"P@3", "P@5", "P@10", "R@3", "R@5", "R@10", "nDCG", "RMSE", "Opt. hybrid"}) {
    EXPECT_NE(text.find(h), std::string::npos) << h;
  }
  EXPECT_NE(text.find("Lowest"), std::string::npos);
  EXPECT_EQ(importances_csv(r.importances), "feature,importance\ngender_F,0.6\nn_ratings,0.4\n");
}
