#include "metahybrid/report.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "metahybrid/text.hpp"

namespace metahybrid {
namespace {

using nlohmann::ordered_json;

ordered_json row_json(const MetricRow& r) {
  ordered_json j;
  j["name"] = r.name;
  j["cutoffs"] = r.cutoffs;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["ndcg"] = r.ndcg;
  j["rmse"] = r.rmse;
  j["n_users"] = r.n_users;
  j["n_pairs"] = r.n_pairs;
  return j;
}

ordered_json pairs_json(const std::vector<std::pair<std::string, double>>& v) {
  ordered_json a = ordered_json::array();
  for (const auto& [name, value] : v) a.push_back({{"name", name}, {"value", value}});
  return a;
}

std::vector<std::pair<std::string, double>> pairs_from(const ordered_json& a) {
  std::vector<std::pair<std::string, double>> v;
  for (const auto& e : a) v.emplace_back(e.at("name").get<std::string>(), e.at("value").get<double>());
  return v;
}

ordered_json to_json(const ExperimentReport& r) {
  ordered_json j;
  j["inner_ratio"] = r.inner_ratio;
  j["seed"] = r.seed;
  j["candidates"] = r.candidates;
  j["rows"] = ordered_json::array();
  for (const auto& row : r.rows) j["rows"].push_back(row_json(row));
  j["label_histogram"] = r.label_histogram;
  j["labeled_users"] = r.labeled_users;
  j["flagged_label_users"] = r.flagged_label_users;
  j["skipped_label_users"] = r.skipped_label_users;
  j["confusion"] = r.confusion;
  j["classifier_accuracy"] = r.classifier_accuracy;
  j["oob_error"] = r.oob_error ? ordered_json(*r.oob_error) : ordered_json(nullptr);
  j["importances"] = pairs_json(r.importances);
  j["grouped_importances"] = pairs_json(r.grouped_importances);
  j["activity"] = ordered_json::array();
  for (const auto& b : r.activity) {
    j["activity"].push_back({{"name", b.name},
                             {"n_users", b.n_users},
                             {"min_ratings", b.min_ratings},
                             {"max_ratings", b.max_ratings},
                             {"mean_ratings", b.mean_ratings},
                             {"rmse", b.rmse}});
  }
  j["evaluated_users"] = r.evaluated_users;
  j["skipped_eval_users"] = r.skipped_eval_users;
  j["warnings"] = r.warnings;
  return j;
}

ExperimentReport from_json(const ordered_json& j) {
  ExperimentReport r;
  r.inner_ratio = j.at("inner_ratio").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.candidates = j.at("candidates").get<std::vector<std::string>>();
  for (const auto& e : j.at("rows")) {
    MetricRow row;
    row.name = e.at("name").get<std::string>();
    row.cutoffs = e.at("cutoffs").get<std::vector<std::size_t>>();
    row.precision = e.at("precision").get<std::vector<double>>();
    row.recall = e.at("recall").get<std::vector<double>>();
    row.ndcg = e.at("ndcg").get<double>();
    row.rmse = e.at("rmse").get<double>();
    row.n_users = e.at("n_users").get<std::size_t>();
    row.n_pairs = e.at("n_pairs").get<std::size_t>();
    r.rows.push_back(std::move(row));
  }
  r.label_histogram = j.at("label_histogram").get<std::vector<std::size_t>>();
  r.labeled_users = j.at("labeled_users").get<std::size_t>();
  r.flagged_label_users = j.at("flagged_label_users").get<std::size_t>();
  r.skipped_label_users = j.at("skipped_label_users").get<std::size_t>();
  r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  r.classifier_accuracy = j.at("classifier_accuracy").get<double>();
  if (!j.at("oob_error").is_null()) r.oob_error = j.at("oob_error").get<double>();
  r.importances = pairs_from(j.at("importances"));
  r.grouped_importances = pairs_from(j.at("grouped_importances"));
  for (const auto& e : j.at("activity")) {
    ActivityBucket b;
    b.name = e.at("name").get<std::string>();
    b.n_users = e.at("n_users").get<std::size_t>();
    b.min_ratings = e.at("min_ratings").get<std::size_t>();
    b.max_ratings = e.at("max_ratings").get<std::size_t>();
    b.mean_ratings = e.at("mean_ratings").get<double>();
    b.rmse = e.at("rmse").get<std::vector<double>>();
    r.activity.push_back(std::move(b));
  }
  r.evaluated_users = j.at("evaluated_users").get<std::size_t>();
  r.skipped_eval_users = j.at("skipped_eval_users").get<std::size_t>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::string ratio_label(double r) {
  const long train = std::lround(r * 100.0);
  return std::to_string(train) + ":" + std::to_string(100 - train);
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' ');
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) { return to_json(report).dump(2) + "\n"; }

ExperimentReport report_from_json(const std::string& text) {
  try {
    return from_json(ordered_json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("report json: ") + e.what());
  }
}

std::string sweep_to_json(std::span<const ExperimentReport> reports) {
  ordered_json j;
  j["runs"] = ordered_json::array();
  for (const auto& r : reports) j["runs"].push_back(to_json(r));
  return j.dump(2) + "\n";
}

std::string render_text(std::span<const ExperimentReport> reports, std::size_t top_features) {
  std::ostringstream out;
  for (const auto& r : reports) {
    std::size_t name_w = 14;
    for (const auto& row : r.rows) name_w = std::max(name_w, row.name.size() + 2);

    out << "== Inner split " << ratio_label(r.inner_ratio) << " (seed " << r.seed << ", "
        << r.evaluated_users << " evaluated users, " << r.skipped_eval_users << " skipped)\n";
    out << pad("Algorithm", name_w);
    if (!r.rows.empty()) {
      for (auto k : r.rows.front().cutoffs) out << pad("P@" + std::to_string(k), 8);
      for (auto k : r.rows.front().cutoffs) out << pad("R@" + std::to_string(k), 8);
    }
    out << pad("nDCG", 8) << "RMSE\n";
    for (const auto& row : r.rows) {
      out << pad(row.name, name_w);
      for (double v : row.precision) out << pad(format_fixed(v, 4), 8);
      for (double v : row.recall) out << pad(format_fixed(v, 4), 8);
      out << pad(format_fixed(row.ndcg, 4), 8) << format_fixed(row.rmse, 4) << "\n";
    }

    out << "\nLabel distribution (" << r.labeled_users << " labeled, " << r.flagged_label_users
        << " all-zero, " << r.skipped_label_users << " skipped)\n";
    for (std::size_t c = 0; c < r.candidates.size(); ++c) {
      out << "  " << pad(r.candidates[c], name_w) << r.label_histogram[c] << "\n";
    }

    out << "\nDispatcher agreement with oracle: " << format_fixed(r.classifier_accuracy, 4);
    if (r.oob_error) out << " (out-of-bag error " << format_fixed(*r.oob_error, 4) << ")";
    out << "\nConfusion (rows: oracle choice, columns: dispatched)\n";
    out << "  " << pad("", name_w);
    for (const auto& c : r.candidates) out << pad(c, name_w);
    out << "\n";
    for (std::size_t a = 0; a < r.confusion.size(); ++a) {
      out << "  " << pad(r.candidates[a], name_w);
      for (auto n : r.confusion[a]) out << pad(std::to_string(n), name_w);
      out << "\n";
    }

    out << "\nFeature importances (top " << std::min(top_features, r.importances.size()) << ")\n";
    for (std::size_t k = 0; k < std::min(top_features, r.importances.size()); ++k) {
      out << "  " << pad(r.importances[k].first, 22) << format_fixed(r.importances[k].second, 4)
          << "\n";
    }
    out << "Importances by attribute\n";
    for (const auto& [name, v] : r.grouped_importances) {
      out << "  " << pad(name, 22) << format_fixed(v, 4) << "\n";
    }

    out << "\nRMSE by activity quartile (ratings in the fit part)\n";
    out << "  " << pad("Bucket", 8) << pad("Users", 7) << pad("Ratings", 10);
    for (const auto& row : r.rows) out << pad(row.name, name_w);
    out << "\n";
    for (const auto& b : r.activity) {
      out << "  " << pad(b.name, 8) << pad(std::to_string(b.n_users), 7)
          << pad(format_fixed(b.mean_ratings, 2), 10);
      for (double v : b.rmse) out << pad(format_fixed(v, 4), name_w);
      out << "\n";
    }
    if (!r.activity.empty()) {
      out << "  " << pad("Lowest", 25);
      for (std::size_t k = 0; k < r.rows.size(); ++k) {
        std::size_t best = 0;
        for (std::size_t b = 1; b < r.activity.size(); ++b) {
          if (r.activity[b].rmse[k] < r.activity[best].rmse[k]) best = b;
        }
        out << pad(r.activity[best].name + " (" + format_fixed(r.activity[best].mean_ratings, 2) +
                       ")",
                   name_w);
      }
      out << "\n";
    }
    if (!r.warnings.empty()) {
      out << "\nWarnings\n";
      for (const auto& w : r.warnings) out << "  " << w << "\n";
    }
    out << "\n";
  }
  return out.str();
}

std::string per_user_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "user,n_fit_ratings,dispatched,oracle";
  for (const auto& c : report.candidates) out << ",ndcg_" << c;
  out << '\n';
  for (const auto& u : report.per_user) {
    out << u.user.value << ',' << u.n_fit_ratings << ',' << report.candidates[u.dispatched] << ','
        << report.candidates[u.oracle];
    for (double v : u.ndcg) out << ',' << format_number(v);
    out << '\n';
  }
  return out.str();
}

std::string importances_csv(const std::vector<std::pair<std::string, double>>& importances) {
  std::ostringstream out;
  out << "feature,importance\n";
  for (const auto& [name, v] : importances) out << name << ',' << format_number(v) << '\n';
  return out.str();
}

}  // namespace metahybrid
