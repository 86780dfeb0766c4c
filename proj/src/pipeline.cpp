#include "metahybrid/pipeline.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "metahybrid/archive.hpp"
#include "metahybrid/report.hpp"
#include "metahybrid/rng.hpp"
#include "metahybrid/text.hpp"

namespace metahybrid {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kContextMagic = "MHCX";
constexpr std::uint32_t kContextVersion = 1;

constexpr const char* kSlices[] = {"train_fit", "train_eval", "test_fit", "test_eval"};

std::string split_csv(const NestedSplit& s) {
  std::string out = "slice,user,item,rating,timestamp\n";
  const std::vector<RatingEvent>* parts[] = {&s.train_fit, &s.train_eval, &s.test_fit, &s.test_eval};
  for (std::size_t p = 0; p < 4; ++p) {
    for (const auto& r : *parts[p]) {
      out += kSlices[p];
      out += ',' + std::to_string(r.user.value) + ',' + std::to_string(r.item.value) + ',' +
             format_number(r.rating) + ',' + std::to_string(r.timestamp) + '\n';
    }
  }
  return out;
}

std::string split_users_csv(const NestedSplit& s) {
  std::string out = "user,fold,flagged\n";
  auto emit = [&](const std::vector<UserId>& users, const char* fold) {
    for (UserId u : users) {
      const bool flagged = std::binary_search(s.flagged_users.begin(), s.flagged_users.end(), u);
      out += std::to_string(u.value) + ',' + fold + ',' + (flagged ? "1" : "0") + '\n';
    }
  };
  emit(s.train_users, "train");
  emit(s.test_users, "test");
  return out;
}

NestedSplit parse_split(const std::string& ratings, const std::string& users) {
  NestedSplit s;
  std::vector<RatingEvent>* parts[] = {&s.train_fit, &s.train_eval, &s.test_fit, &s.test_eval};
  std::istringstream in(ratings);
  std::string line;
  std::getline(in, line);
  if (strip_cr(line) != "slice,user,item,rating,timestamp") throw IngestError("split csv: bad header");
  for (std::size_t no = 2; std::getline(in, line); ++no) {
    if (trim(line).empty()) continue;
    const auto f = split(strip_cr(line), ',');
    const auto where = std::find(std::begin(kSlices), std::end(kSlices), f[0]);
    std::optional<std::int64_t> u, i, ts;
    std::optional<double> r;
    if (f.size() == 5) {
      u = parse_int<std::int64_t>(f[1]);
      i = parse_int<std::int64_t>(f[2]);
      r = parse_double(f[3]);
      ts = parse_int<std::int64_t>(f[4]);
    }
    if (where == std::end(kSlices) || !u || !i || !r || !ts) {
      throw IngestError("split csv: malformed line " + std::to_string(no));
    }
    parts[where - std::begin(kSlices)]->push_back({UserId(*u), ItemId(*i), *r, *ts});
  }
  std::istringstream uin(users);
  std::getline(uin, line);
  if (strip_cr(line) != "user,fold,flagged") throw IngestError("split users csv: bad header");
  for (std::size_t no = 2; std::getline(uin, line); ++no) {
    if (trim(line).empty()) continue;
    const auto f = split(strip_cr(line), ',');
    const auto u = f.size() == 3 ? parse_int<std::int64_t>(f[0]) : std::nullopt;
    if (!u || (f[1] != "train" && f[1] != "test") || (f[2] != "0" && f[2] != "1")) {
      throw IngestError("split users csv: malformed line " + std::to_string(no));
    }
    (f[1] == "train" ? s.train_users : s.test_users).emplace_back(*u);
    if (f[2] == "1") s.flagged_users.emplace_back(*u);
  }
  std::sort(s.flagged_users.begin(), s.flagged_users.end());
  return s;
}

std::string lines_of(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += s + '\n';
  return out;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line)) out.emplace_back(strip_cr(line));
  return out;
}

template <typename Fn>
void in_stage(std::string_view stage, std::uint64_t seed, Fn&& fn) {
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string(stage), seed, e.what());
  }
}

}  // namespace

Dataset ingest_dataset(const ExperimentConfig& config, IngestSummary* summary) {
  IngestSummary local;
  IngestSummary& s = summary ? *summary : local;
  const auto& d = config.dataset;
  LoadOptions options{.malformed_tolerance = d.malformed_tolerance};
  Dataset ds;
  switch (d.format) {
    case DatasetFormat::MovieLens:
      ds = load_movielens(d.ratings, d.users, d.items, options, &s.load);
      break;
    case DatasetFormat::Generic:
      ds = load_generic_ratings(d.ratings, options, &s.load);
      break;
    case DatasetFormat::Canonical:
      ds = read_canonical(read_file(d.ratings));
      break;
  }
  if (d.metadata) {
    EnrichmentReport er;
    ds = enrich_items(std::move(ds), *d.metadata, &er);
    s.enrichment = er;
  }
  s.users_before_filters = ds.users.size();
  s.ratings_before_filters = ds.ratings.size();
  if (config.cold_start.enabled) {
    ds = induce_cold_start(std::move(ds), derive_seed(config.seed, "cold_start"),
                           config.cold_start.min_keep, config.cold_start.max_keep);
    s.notes.push_back("cold start applied");
  }
  if (config.min_ratings > 0) {
    ds = filter_min_ratings(std::move(ds), config.min_ratings);
    s.notes.push_back("kept users with at least " + std::to_string(config.min_ratings) + " ratings");
  }
  ds.validate();
  return ds;
}

ExperimentSettings settings_for(const ExperimentConfig& config, double inner_ratio) {
  ExperimentSettings s;
  s.candidates = config.candidates;
  s.plan.outer_train_ratio = config.outer_train_ratio;
  s.plan.inner_train_ratio = inner_ratio;
  s.plan.seed = config.seed;
  s.plan.mode = config.split_mode;
  s.forest = config.forest;
  s.relevance = config.relevance;
  s.context = config.context;
  s.threads = config.threads;
  return s;
}

Pipeline::Pipeline(ExperimentConfig config, std::ostream* log)
    : config_(std::move(config)), log_(log) {
  config_.validate();
}

const std::vector<std::string>& Pipeline::stages() {
  static const std::vector<std::string> kStages{"ingest", "split",    "fit-candidates", "label",
                                                "train-meta", "evaluate", "report"};
  return kStages;
}

void Pipeline::run(std::string_view stage) {
  if (stage == "ingest") return ingest();
  if (stage == "split") return split();
  if (stage == "fit-candidates") return fit_candidates_stage();
  if (stage == "label") return label();
  if (stage == "train-meta") return train_meta_stage();
  if (stage == "evaluate") return evaluate();
  if (stage == "report") return report();
  throw InvalidArgument("unknown stage '" + std::string(stage) + "'");
}

void Pipeline::run_all() {
  for (const auto& s : stages()) run(s);
}

fs::path Pipeline::require(const fs::path& relative, const char* producer) const {
  const auto p = out() / relative;
  if (!fs::exists(p)) {
    throw InvalidArgument("missing artifact " + p.string() + " (produced by stage '" + producer +
                          "')");
  }
  return p;
}

void Pipeline::write(const fs::path& relative, std::string_view contents) const {
  const auto p = out() / relative;
  fs::create_directories(p.parent_path());
  write_file(p, contents);
}

void Pipeline::note(std::string_view stage, const std::string& message) const {
  if (log_) *log_ << '[' << stage << "] " << message << '\n';
}

Dataset Pipeline::load_dataset() const {
  return read_canonical(read_file(require("dataset.txt", "ingest")));
}

void Pipeline::ingest() {
  in_stage("ingest", config_.seed, [&] {
    IngestSummary s;
    const Dataset ds = ingest_dataset(config_, &s);
    write("dataset.txt", write_canonical(ds));
    ordered_json j;
    j["lines_read"] = s.load.lines_read;
    j["malformed_lines"] = s.load.malformed_lines;
    j["load_warnings"] = s.load.warnings;
    if (s.enrichment) {
      j["enrichment"] = {{"matched_by_id", s.enrichment->matched_by_id},
                         {"matched_by_title", s.enrichment->matched_by_title},
                         {"unmatched_items", s.enrichment->unmatched_items},
                         {"distinct_keywords", s.enrichment->distinct_keywords},
                         {"warnings", s.enrichment->warnings}};
    }
    j["users_before_filters"] = s.users_before_filters;
    j["ratings_before_filters"] = s.ratings_before_filters;
    j["users"] = ds.users.size();
    j["items"] = ds.items.size();
    j["ratings"] = ds.ratings.size();
    j["notes"] = s.notes;
    write("ingest.json", j.dump(2) + "\n");
    note("ingest", std::to_string(ds.users.size()) + " users, " + std::to_string(ds.items.size()) +
                       " items, " + std::to_string(ds.ratings.size()) + " ratings");
  });
}

void Pipeline::split() {
  const auto seeds = stage_seeds(config_.seed);
  in_stage("split", seeds.split, [&] {
    const Dataset ds = load_dataset();
    for (double r : config_.inner_ratios) {
      const auto s = nested_split(ds, settings_for(config_, r).plan);
      const auto tag = ratio_tag(r);
      write("splits/" + tag + ".csv", split_csv(s));
      write("splits/" + tag + "_users.csv", split_users_csv(s));
      note("split", tag + ": " + std::to_string(s.train_users.size()) + " train users, " +
                        std::to_string(s.test_users.size()) + " test users");
    }
  });
}

NestedSplit Pipeline::read_split(const std::string& tag) const {
  const auto ratings = require("splits/" + tag + ".csv", "split");
  const auto users = require("splits/" + tag + "_users.csv", "split");
  return parse_split(read_file(ratings), read_file(users));
}

void Pipeline::fit_candidates_stage() {
  const auto seeds = stage_seeds(config_.seed);
  in_stage("fit-candidates", seeds.fit_train, [&] {
    const Dataset ds = load_dataset();
    const auto catalog = ItemCatalog::from_dataset(ds);
    for (double r : config_.inner_ratios) {
      const auto tag = ratio_tag(r);
      const auto s = read_split(tag);
      const auto train = fit_candidates(config_.candidates, s.train_fit, catalog, seeds.fit_train,
                                        config_.threads);
      const auto test = fit_candidates(config_.candidates, s.test_fit, catalog, seeds.fit_test,
                                       config_.threads);
      for (std::size_t c = 0; c < config_.candidates.size(); ++c) {
        const auto& name = config_.candidates[c].name;
        for (const auto& [fold, models] : {std::pair{"train", &train}, std::pair{"test", &test}}) {
          const auto p = out() / "models" / tag / fold / (name + ".bin");
          fs::create_directories(p.parent_path());
          save_recommender(*(*models)[c], p);
        }
      }
      note("fit-candidates", tag + ": fitted " + std::to_string(config_.candidates.size()) +
                                 " candidates on both folds");
    }
  });
}

namespace {

FittedCandidates load_models(const CandidateSet& set, const fs::path& dir) {
  FittedCandidates out;
  for (const auto& c : set.candidates()) {
    out.push_back(load_recommender(dir / (c.name + ".bin")));
    if (out.back()->spec() != c.spec) {
      throw InvalidArgument("model " + (dir / (c.name + ".bin")).string() +
                            " was fitted with a different specification");
    }
  }
  return out;
}

}  // namespace

void Pipeline::label() {
  const auto seeds = stage_seeds(config_.seed);
  in_stage("label", seeds.split, [&] {
    const Dataset ds = load_dataset();
    for (double r : config_.inner_ratios) {
      const auto tag = ratio_tag(r);
      const auto s = read_split(tag);
      for (const auto& c : config_.candidates.candidates()) {
        require(fs::path("models") / tag / "train" / (c.name + ".bin"), "fit-candidates");
      }
      const auto models = load_models(config_.candidates, out() / "models" / tag / "train");

      std::vector<std::string> warnings;
      const auto train_raw = extract_all(ds, s.train_users, s.train_fit, config_.threads);
      const auto context = fit_context_model(train_raw, ds, config_.context, &warnings);
      const auto train_ctx = assemble_matrix(context, train_raw);
      const auto test_ctx =
          assemble_matrix(context, extract_all(ds, s.test_users, s.test_fit, config_.threads));
      ArchiveWriter w(kContextMagic, kContextVersion);
      context.save(w);
      fs::create_directories(out() / "contexts");
      w.save(out() / "contexts" / (tag + "_model.bin"));
      write("contexts/" + tag + "_train.csv", train_ctx.to_csv());
      write("contexts/" + tag + "_test.csv", test_ctx.to_csv());
      write("contexts/" + tag + "_warnings.txt", lines_of(warnings));

      const auto labeled = generate_labels(config_.candidates, models, train_ctx, s.train_fit,
                                           s.train_eval, config_.relevance, config_.threads);
      write("labels/" + tag + ".csv", labeled.to_csv());
      note("label", tag + ": " + std::to_string(labeled.rows.size()) + " labeled users, " +
                        std::to_string(labeled.flagged_count()) + " flagged");
    }
  });
}

void Pipeline::train_meta_stage() {
  const auto seeds = stage_seeds(config_.seed);
  in_stage("train-meta", seeds.forest, [&] {
    for (double r : config_.inner_ratios) {
      const auto tag = ratio_tag(r);
      const auto ctx = ContextMatrix::from_csv(read_file(require("contexts/" + tag + "_train.csv", "label")));
      const auto labeled =
          LabeledTrainingSet::from_csv(read_file(require("labels/" + tag + ".csv", "label")), ctx);
      auto reader = ArchiveReader::open(require("contexts/" + tag + "_model.bin", "label"),
                                        kContextMagic, kContextVersion);
      const auto context = ContextModel::load(reader);
      if (labeled.candidates != config_.candidates.names()) {
        throw InvalidArgument("labels/" + tag + ".csv was produced for other candidates");
      }
      ForestParams params = config_.forest;
      params.seed = seeds.forest;
      params.threads = config_.threads;
      std::vector<std::string> warnings;
      const auto forest = train_meta(labeled, params, &warnings);
      fs::create_directories(out() / "meta");
      forest.save(out() / "meta" / (tag + "_forest.bin"));
      write("meta/" + tag + "_importances.csv",
            importances_csv(ranked_importances(forest, context.feature_names())));
      write("meta/" + tag + "_importances_grouped.csv",
            importances_csv(grouped_importances(forest, context.feature_sources())));
      write("meta/" + tag + "_warnings.txt", lines_of(warnings));
      note("train-meta", tag + ": " + std::to_string(params.n_estimators) + " trees");
    }
  });
}

void Pipeline::evaluate() {
  const auto seeds = stage_seeds(config_.seed);
  in_stage("evaluate", seeds.split, [&] {
    for (double r : config_.inner_ratios) {
      const auto tag = ratio_tag(r);
      const auto s = read_split(tag);
      for (const auto& c : config_.candidates.candidates()) {
        require(fs::path("models") / tag / "test" / (c.name + ".bin"), "fit-candidates");
      }
      const auto models = load_models(config_.candidates, out() / "models" / tag / "test");
      auto reader = ArchiveReader::open(require("contexts/" + tag + "_model.bin", "label"),
                                        kContextMagic, kContextVersion);
      const auto context = ContextModel::load(reader);
      const auto train_ctx =
          ContextMatrix::from_csv(read_file(require("contexts/" + tag + "_train.csv", "label")));
      const auto test_ctx =
          ContextMatrix::from_csv(read_file(require("contexts/" + tag + "_test.csv", "label")));
      const auto labeled =
          LabeledTrainingSet::from_csv(read_file(require("labels/" + tag + ".csv", "label")), train_ctx);
      const auto forest = ForestModel::load(require("meta/" + tag + "_forest.bin", "train-meta"));

      auto rep = evaluate_experiment(config_.candidates, models, forest, context, test_ctx,
                                     s.test_fit, s.test_eval, labeled, config_.relevance,
                                     config_.threads);
      rep.inner_ratio = r;
      rep.seed = config_.seed;
      rep.warnings = read_lines(require("contexts/" + tag + "_warnings.txt", "label"));
      for (auto& w : read_lines(require("meta/" + tag + "_warnings.txt", "train-meta"))) {
        rep.warnings.push_back(std::move(w));
      }
      write("evaluation/" + tag + ".json", report_to_json(rep));
      write("evaluation/" + tag + "_per_user.csv", per_user_csv(rep));
      note("evaluate", tag + ": hybrid nDCG " + format_fixed(rep.row(kHybridRow).ndcg, 4) +
                           ", oracle " + format_fixed(rep.row(kOracleRow).ndcg, 4));
    }
  });
}

void Pipeline::report() {
  in_stage("report", config_.seed, [&] {
    std::vector<ExperimentReport> reports;
    for (double r : config_.inner_ratios) {
      reports.push_back(report_from_json(
          read_file(require("evaluation/" + ratio_tag(r) + ".json", "evaluate"))));
    }
    write("report.json", sweep_to_json(reports));
    const auto text = render_text(reports);
    write("report.txt", text);
    if (log_) *log_ << text;

    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(out())) {
      if (e.is_regular_file() && e.path().filename() != "manifest.json") {
        files.push_back(fs::relative(e.path(), out()));
      }
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
    const auto seeds = stage_seeds(config_.seed);
    ordered_json m;
    m["seed"] = config_.seed;
    m["stage_seeds"] = {{"split", seeds.split},
                        {"fit_train", seeds.fit_train},
                        {"fit_test", seeds.fit_test},
                        {"forest", seeds.forest},
                        {"cold_start", derive_seed(config_.seed, "cold_start")}};
    m["candidates"] = config_.candidates.names();
    m["inner_ratios"] = config_.inner_ratios;
    m["files"] = ordered_json::array();
    for (const auto& f : files) {
      const auto p = out() / f;
      m["files"].push_back({{"path", f.generic_string()},
                            {"sha256", sha256_file(p)},
                            {"bytes", fs::file_size(p)}});
    }
    write("manifest.json", m.dump(2) + "\n");
  });
}

}  // namespace metahybrid
