#include "metahybrid/hybrid.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "metahybrid/parallel.hpp"
#include "metahybrid/rng.hpp"
#include "metahybrid/text.hpp"

namespace metahybrid {

CandidateSet::CandidateSet(std::vector<Candidate> candidates) : candidates_(std::move(candidates)) {
  if (candidates_.size() < 2) throw InvalidArgument("candidate set needs at least two candidates");
  std::set<std::string> names;
  for (const auto& c : candidates_) {
    if (c.name.empty()) throw InvalidArgument("candidate name must not be empty");
    if (c.name.find_first_of(",\n\r\t/\\") != std::string::npos) {
      throw InvalidArgument("candidate name contains a reserved character: " + c.name);
    }
    if (!names.insert(c.name).second) throw InvalidArgument("duplicate candidate name: " + c.name);
    validate_spec(c.spec);
  }
}

CandidateSet CandidateSet::preset(std::string_view name) {
  std::vector<Algorithm> algs;
  if (name == "cf") {
    algs = {Algorithm::BaselineOnly, Algorithm::CoClustering, Algorithm::SlopeOne, Algorithm::SvdMf};
  } else if (name == "mixed") {
    algs = {Algorithm::ContentBased, Algorithm::KnnBasic, Algorithm::WarpHybrid};
  } else {
    throw InvalidArgument("unknown candidate preset '" + std::string(name) + "' (cf, mixed)");
  }
  std::vector<Candidate> out;
  for (auto a : algs) out.push_back({std::string(algorithm_name(a)), RecommenderSpec::make(a)});
  return CandidateSet(std::move(out));
}

std::vector<std::string> CandidateSet::names() const {
  std::vector<std::string> out;
  for (const auto& c : candidates_) out.push_back(c.name);
  return out;
}

std::size_t CandidateSet::index_of(std::string_view name) const {
  for (std::size_t k = 0; k < candidates_.size(); ++k) {
    if (candidates_[k].name == name) return k;
  }
  throw InvalidArgument("unknown candidate '" + std::string(name) + "'");
}

FittedCandidates fit_candidates(const CandidateSet& candidates, std::span<const RatingEvent> train,
                                const ItemCatalog& catalog, std::uint64_t seed, unsigned threads) {
  FittedCandidates out(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t k) {
    const auto& c = candidates[k];
    out[k] = fit(c.spec, train, catalog, derive_seed(seed, c.name));
  });
  return out;
}

std::size_t LabeledTrainingSet::flagged_count() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const LabeledRow& r) { return r.flagged; }));
}

std::vector<std::size_t> LabeledTrainingSet::label_histogram() const {
  std::vector<std::size_t> h(candidates.size(), 0);
  for (const auto& r : rows) ++h[r.label];
  return h;
}

std::string LabeledTrainingSet::to_csv() const {
  std::ostringstream out;
  out << "user,label,flagged";
  for (const auto& c : candidates) out << ",ndcg_" << c;
  out << '\n';
  for (const auto& r : rows) {
    out << r.user.value << ',' << candidates[r.label] << ',' << (r.flagged ? 1 : 0);
    for (double s : r.scores) out << ',' << format_number(s);
    out << '\n';
  }
  for (UserId u : skipped_users) {
    out << u.value << ",,skipped";
    for (std::size_t k = 0; k < candidates.size(); ++k) out << ',';
    out << '\n';
  }
  return out.str();
}

LabeledTrainingSet LabeledTrainingSet::from_csv(const std::string& text,
                                                const ContextMatrix& contexts) {
  LabeledTrainingSet set;
  set.feature_names = contexts.names;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IngestError("labels csv: empty file");
  const auto header = split(strip_cr(line), ',');
  if (header.size() < 5 || header[0] != "user" || header[1] != "label" || header[2] != "flagged") {
    throw IngestError("labels csv: bad header");
  }
  for (std::size_t k = 3; k < header.size(); ++k) {
    if (!header[k].starts_with("ndcg_")) throw IngestError("labels csv: bad score column");
    set.candidates.emplace_back(header[k].substr(5));
  }
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (trim(line).empty()) continue;
    const auto f = split(strip_cr(line), ',');
    const auto user = f.empty() ? std::nullopt : parse_int<std::int64_t>(f[0]);
    if (f.size() != header.size() || !user) {
      throw IngestError("labels csv: malformed line " + std::to_string(line_no));
    }
    if (f[2] == "skipped") {
      set.skipped_users.emplace_back(*user);
      continue;
    }
    LabeledRow row;
    row.user = UserId(*user);
    auto it = std::find(set.candidates.begin(), set.candidates.end(), f[1]);
    if (it == set.candidates.end()) {
      throw IngestError("labels csv: unknown label on line " + std::to_string(line_no));
    }
    row.label = static_cast<std::size_t>(it - set.candidates.begin());
    row.flagged = f[2] == "1";
    for (std::size_t k = 3; k < f.size(); ++k) {
      auto v = parse_double(f[k]);
      if (!v) throw IngestError("labels csv: bad score on line " + std::to_string(line_no));
      row.scores.push_back(*v);
    }
    const auto ctx = contexts.row_of(row.user);
    row.context.assign(ctx.begin(), ctx.end());
    set.rows.push_back(std::move(row));
  }
  return set;
}

LabeledTrainingSet generate_labels(const CandidateSet& candidates, const FittedCandidates& models,
                                   const ContextMatrix& contexts,
                                   std::span<const RatingEvent> inner_train,
                                   std::span<const RatingEvent> inner_test,
                                   const RelevanceConfig& config, unsigned threads) {
  if (candidates.size() == 0) throw InvalidArgument("generate_labels: no candidates");
  if (models.size() != candidates.size()) {
    throw InvalidArgument("generate_labels: one fitted model per candidate required");
  }
  config.validate();
  const auto holdouts = holdouts_of(inner_test);
  const auto train_items = items_of(inner_train);
  static const std::set<ItemId> kNone;

  LabeledTrainingSet set;
  set.candidates = candidates.names();
  set.feature_names = contexts.names;
  std::vector<std::size_t> active;  // rows of `contexts` with a holdout
  for (std::size_t r = 0; r < contexts.users.size(); ++r) {
    if (holdouts.contains(contexts.users[r])) {
      active.push_back(r);
    } else {
      set.skipped_users.push_back(contexts.users[r]);
    }
  }

  const std::size_t n_c = candidates.size();
  std::vector<double> scores(active.size() * n_c, 0.0);
  parallel_for(scores.size(), threads, [&](std::size_t job) {
    const std::size_t a = job / n_c, c = job % n_c;
    const UserId user = contexts.users[active[a]];
    auto ex = train_items.find(user);
    const auto ranked = models[c]->recommend_top_n(user, config.ndcg_cutoff,
                                                   ex == train_items.end() ? kNone : ex->second);
    scores[job] = ndcg_at(ranked, holdouts.at(user), config.ndcg_cutoff, config);
  });

  for (std::size_t a = 0; a < active.size(); ++a) {
    LabeledRow row;
    row.user = contexts.users[active[a]];
    const auto ctx = contexts.values.row(active[a]);
    row.context.assign(ctx.begin(), ctx.end());
    row.scores.assign(scores.begin() + static_cast<std::ptrdiff_t>(a * n_c),
                      scores.begin() + static_cast<std::ptrdiff_t>((a + 1) * n_c));
    row.label = static_cast<std::size_t>(std::max_element(row.scores.begin(), row.scores.end()) -
                                         row.scores.begin());
    row.flagged = row.scores[row.label] == 0.0;
    set.rows.push_back(std::move(row));
  }
  return set;
}

ForestModel train_meta(const LabeledTrainingSet& labeled, const ForestParams& params,
                       std::vector<std::string>* warnings) {
  if (labeled.rows.empty()) throw InvalidArgument("train_meta: empty labeled set");
  Matrix X(0, labeled.rows.front().context.size());
  std::vector<std::size_t> y;
  for (const auto& r : labeled.rows) {
    X.push_row(r.context);
    y.push_back(r.label);
  }
  const auto hist = labeled.label_histogram();
  const auto distinct = std::count_if(hist.begin(), hist.end(), [](std::size_t n) { return n > 0; });
  if (distinct < 2 && warnings) {
    warnings->push_back("train_meta: only one label present; the dispatcher is constant");
  }
  return train_forest(X, y, labeled.candidates, params, warnings);
}

void MetaHybridModel::validate() const {
  if (forest.labels() != candidates.names()) {
    throw InvalidArgument("meta-hybrid: forest labels differ from the candidate names");
  }
  if (models.size() != candidates.size()) {
    throw InvalidArgument("meta-hybrid: one fitted model per candidate required");
  }
  if (forest.n_features() != context.width()) {
    throw InvalidArgument("meta-hybrid: forest width differs from the context schema");
  }
}

std::size_t MetaHybridModel::predict_recommender(std::span<const double> context_vector) const {
  if (context_vector.size() != context.width()) {
    throw InvalidArgument("predict_recommender: context vector does not match the schema");
  }
  return forest.predict(context_vector).label;
}

std::vector<ItemId> MetaHybridModel::recommend(UserId user, std::span<const double> context_vector,
                                               std::size_t n, const std::set<ItemId>& exclude,
                                               std::size_t* dispatched) const {
  const std::size_t k = predict_recommender(context_vector);
  if (dispatched) *dispatched = k;
  return models[k]->recommend_top_n(user, n, exclude);
}

std::vector<ItemId> MetaHybridModel::recommend_from_history(UserId user,
                                                             std::span<const RatingEvent> history,
                                                             const Dataset& dataset, std::size_t n,
                                                             const std::set<ItemId>& exclude,
                                                             std::size_t* dispatched) const {
  const auto row = context.encode(extract_raw(user, history, dataset));
  return recommend(user, row, n, exclude, dispatched);
}

std::vector<std::size_t> oracle_select(std::span<const std::vector<double>> per_user_ndcg) {
  std::vector<std::size_t> out;
  out.reserve(per_user_ndcg.size());
  for (const auto& row : per_user_ndcg) {
    if (row.empty()) throw InvalidArgument("oracle_select: empty score row");
    out.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

}  // namespace metahybrid
