#include "metahybrid/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "metahybrid/parallel.hpp"
#include "metahybrid/rng.hpp"

namespace metahybrid {

StageError::StageError(std::string stage, std::uint64_t seed, const std::string& what)
    : Error("stage '" + stage + "' failed (seed " + std::to_string(seed) + "): " + what),
      stage_(std::move(stage)),
      seed_(seed) {}

StageSeeds stage_seeds(std::uint64_t master) {
  return {master, derive_seed(master, "fit/train"), derive_seed(master, "fit/test"),
          derive_seed(master, "forest")};
}

const MetricRow& ExperimentReport::row(std::string_view name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw InvalidArgument("report has no row '" + std::string(name) + "'");
}

namespace {

double pooled_rmse(std::span<const UserEvaluation* const> users) {
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto* u : users) {
    for (const auto& p : u->pairs) {
      sq += (p.truth - p.predicted) * (p.truth - p.predicted);
      ++n;
    }
  }
  return n ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
}

template <typename Fn>
auto run_stage(const char* stage, std::uint64_t seed, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, seed, e.what());
  }
}

}  // namespace

ExperimentReport evaluate_experiment(const CandidateSet& candidates,
                                     const FittedCandidates& test_models,
                                     const ForestModel& forest, const ContextModel& context,
                                     const ContextMatrix& test_contexts,
                                     std::span<const RatingEvent> test_fit,
                                     std::span<const RatingEvent> test_eval,
                                     const LabeledTrainingSet& labeled,
                                     const RelevanceConfig& relevance, unsigned threads) {
  relevance.validate();
  const std::size_t n_c = candidates.size();
  if (test_models.size() != n_c) throw InvalidArgument("evaluate: one model per candidate required");
  if (forest.labels() != candidates.names()) {
    throw InvalidArgument("evaluate: forest labels differ from the candidate names");
  }

  ExperimentReport report;
  report.candidates = candidates.names();
  report.label_histogram = labeled.label_histogram();
  report.labeled_users = labeled.rows.size();
  report.flagged_label_users = labeled.flagged_count();
  report.skipped_label_users = labeled.skipped_users.size();
  report.oob_error = forest.oob_error();
  report.importances = ranked_importances(forest, context.feature_names());
  report.grouped_importances = grouped_importances(forest, context.feature_sources());

  const auto holdouts = holdouts_of(test_eval);
  const auto fit_items = items_of(test_fit);
  std::vector<std::size_t> users;  // context rows with a holdout
  for (std::size_t r = 0; r < test_contexts.users.size(); ++r) {
    if (holdouts.contains(test_contexts.users[r])) {
      users.push_back(r);
    } else {
      ++report.skipped_eval_users;
    }
  }
  report.evaluated_users = users.size();

  static const std::set<ItemId> kNone;
  std::vector<UserEvaluation> evals(users.size() * n_c);
  std::vector<std::size_t> dispatched(users.size());
  parallel_for(evals.size(), threads, [&](std::size_t job) {
    const std::size_t a = job / n_c, c = job % n_c;
    const UserId user = test_contexts.users[users[a]];
    auto ex = fit_items.find(user);
    evals[job] = evaluate_user(*test_models[c], user, holdouts.at(user),
                               ex == fit_items.end() ? kNone : ex->second, relevance);
  });
  parallel_for(users.size(), threads, [&](std::size_t a) {
    dispatched[a] = forest.predict(test_contexts.values.row(users[a])).label;
  });

  std::vector<std::vector<double>> ndcg(users.size(), std::vector<double>(n_c));
  for (std::size_t a = 0; a < users.size(); ++a) {
    for (std::size_t c = 0; c < n_c; ++c) ndcg[a][c] = evals[a * n_c + c].ndcg;
  }
  const auto oracle = oracle_select(ndcg);

  // Rows: candidates, Hybrid, Opt. hybrid. picks[row][a] is the evaluation used.
  std::vector<std::vector<const UserEvaluation*>> picks(n_c + 2);
  for (std::size_t a = 0; a < users.size(); ++a) {
    for (std::size_t c = 0; c < n_c; ++c) picks[c].push_back(&evals[a * n_c + c]);
    picks[n_c].push_back(&evals[a * n_c + dispatched[a]]);
    picks[n_c + 1].push_back(&evals[a * n_c + oracle[a]]);
  }
  for (std::size_t c = 0; c < n_c; ++c) {
    report.rows.push_back(aggregate_row(candidates[c].name, picks[c], relevance));
  }
  report.rows.push_back(aggregate_row(kHybridRow, picks[n_c], relevance));
  report.rows.push_back(aggregate_row(kOracleRow, picks[n_c + 1], relevance));

  report.confusion.assign(n_c, std::vector<std::size_t>(n_c, 0));
  std::size_t correct = 0;
  for (std::size_t a = 0; a < users.size(); ++a) {
    ++report.confusion[oracle[a]][dispatched[a]];
    if (oracle[a] == dispatched[a]) ++correct;
  }
  report.classifier_accuracy =
      users.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(users.size());

  for (std::size_t a = 0; a < users.size(); ++a) {
    const UserId user = test_contexts.users[users[a]];
    auto ex = fit_items.find(user);
    report.per_user.push_back({user, ex == fit_items.end() ? 0 : ex->second.size(), dispatched[a],
                               oracle[a], ndcg[a]});
  }

  // Activity quartiles by number of fit ratings, ties by user id.
  std::vector<std::size_t> order(users.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return report.per_user[x].n_fit_ratings < report.per_user[y].n_fit_ratings;
  });
  const std::size_t n_buckets = std::min<std::size_t>(4, users.size());
  for (std::size_t b = 0; b < n_buckets; ++b) {
    const std::size_t lo = b * users.size() / n_buckets, hi = (b + 1) * users.size() / n_buckets;
    ActivityBucket bucket;
    bucket.name = "Q" + std::to_string(b + 1);
    bucket.n_users = hi - lo;
    bucket.min_ratings = report.per_user[order[lo]].n_fit_ratings;
    bucket.max_ratings = report.per_user[order[hi - 1]].n_fit_ratings;
    double total = 0.0;
    for (std::size_t k = lo; k < hi; ++k) total += static_cast<double>(report.per_user[order[k]].n_fit_ratings);
    bucket.mean_ratings = total / static_cast<double>(hi - lo);
    for (const auto& row_picks : picks) {
      std::vector<const UserEvaluation*> in_bucket;
      for (std::size_t k = lo; k < hi; ++k) in_bucket.push_back(row_picks[order[k]]);
      bucket.rmse.push_back(pooled_rmse(in_bucket));
    }
    report.activity.push_back(std::move(bucket));
  }
  return report;
}

ExperimentReport run_experiment(const Dataset& dataset, const ExperimentSettings& settings) {
  const auto seeds = stage_seeds(settings.plan.seed);
  const unsigned threads = settings.threads;
  std::vector<std::string> warnings;

  const auto split = run_stage("split", seeds.split, [&] { return nested_split(dataset, settings.plan); });
  const auto catalog = ItemCatalog::from_dataset(dataset);
  const auto train_models = run_stage("fit-candidates", seeds.fit_train, [&] {
    return fit_candidates(settings.candidates, split.train_fit, catalog, seeds.fit_train, threads);
  });
  const auto context = run_stage("label", seeds.split, [&] {
    const auto raw = extract_all(dataset, split.train_users, split.train_fit, threads);
    return fit_context_model(raw, dataset, settings.context, &warnings);
  });
  const auto labeled = run_stage("label", seeds.split, [&] {
    const auto raw = extract_all(dataset, split.train_users, split.train_fit, threads);
    return generate_labels(settings.candidates, train_models, assemble_matrix(context, raw),
                           split.train_fit, split.train_eval, settings.relevance, threads);
  });
  ForestParams forest_params = settings.forest;
  forest_params.seed = seeds.forest;
  forest_params.threads = threads;
  const auto forest = run_stage("train-meta", seeds.forest, [&] {
    return train_meta(labeled, forest_params, &warnings);
  });
  const auto test_models = run_stage("fit-candidates", seeds.fit_test, [&] {
    return fit_candidates(settings.candidates, split.test_fit, catalog, seeds.fit_test, threads);
  });
  auto report = run_stage("evaluate", seeds.split, [&] {
    const auto raw = extract_all(dataset, split.test_users, split.test_fit, threads);
    return evaluate_experiment(settings.candidates, test_models, forest, context,
                               assemble_matrix(context, raw), split.test_fit, split.test_eval,
                               labeled, settings.relevance, threads);
  });
  report.inner_ratio = settings.plan.inner_train_ratio;
  report.seed = settings.plan.seed;
  report.warnings = std::move(warnings);
  return report;
}

std::vector<ExperimentReport> run_sweep(const Dataset& dataset, ExperimentSettings settings,
                                        std::span<const double> inner_ratios) {
  std::vector<ExperimentReport> out;
  for (double r : inner_ratios) {
    settings.plan.inner_train_ratio = r;
    out.push_back(run_experiment(dataset, settings));
  }
  return out;
}

}  // namespace metahybrid
