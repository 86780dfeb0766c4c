#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metahybrid/experiment.hpp"

namespace metahybrid {

/// Structured form of one run. Per-user results go to per_user_csv instead.
std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);

/// All runs of a sweep as one JSON document.
std::string sweep_to_json(std::span<const ExperimentReport> reports);

/// Human-readable tables: metric rows, label histogram, confusion matrix,
/// importances and RMSE by activity.
std::string render_text(std::span<const ExperimentReport> reports, std::size_t top_features = 15);

/// user,n_fit_ratings,dispatched,oracle,ndcg_<candidate>...
std::string per_user_csv(const ExperimentReport& report);

/// feature,importance
std::string importances_csv(const std::vector<std::pair<std::string, double>>& importances);

}  // namespace metahybrid
