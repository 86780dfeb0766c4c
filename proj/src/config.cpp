#include "metahybrid/config.hpp"

#include <cmath>
#include <cstdlib>
#include <set>

#include "json.hpp"
#include "metahybrid/archive.hpp"
#include "metahybrid/text.hpp"

namespace metahybrid {
namespace {

using nlohmann::json;

/// Rejects keys outside `allowed`; `where` prefixes the message.
void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidArgument(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw InvalidArgument((where.empty() ? "" : where + ".") + key + ": unknown key");
    }
  }
}

template <typename T>
T get_as(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(where + "." + key + ": missing or wrong type");
  }
}

template <typename T>
void read_opt(const json& obj, const std::string& key, const std::string& where, T& out) {
  if (obj.contains(key)) out = get_as<T>(obj, key, where);
}

std::size_t get_count(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw InvalidArgument(where + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

void read_count(const json& obj, const std::string& key, const std::string& where,
                std::size_t& out) {
  if (obj.contains(key)) out = get_count(obj, key, where);
}

void read_opt_count(const json& obj, const std::string& key, const std::string& where,
                    std::optional<std::size_t>& out) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) {
    out.reset();
  } else {
    out = get_count(obj, key, where);
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

CandidateSet parse_candidates(const json& c) {
  check_keys(c, {"preset", "list"}, "candidates");
  if (c.contains("preset") == c.contains("list")) {
    throw InvalidArgument("candidates: give exactly one of 'preset' or 'list'");
  }
  if (c.contains("preset")) return CandidateSet::preset(get_as<std::string>(c, "preset", "candidates"));
  std::vector<Candidate> list;
  const auto& arr = c.at("list");
  if (!arr.is_array()) throw InvalidArgument("candidates.list: expected an array");
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string where = "candidates.list[" + std::to_string(k) + "]";
    check_keys(arr[k], {"name", "algorithm", "params"}, where);
    const auto alg = parse_algorithm(get_as<std::string>(arr[k], "algorithm", where));
    ParamMap params;
    if (arr[k].contains("params")) {
      const auto& p = arr[k]["params"];
      if (!p.is_object()) throw InvalidArgument(where + ".params: expected an object");
      for (const auto& [key, value] : p.items()) {
        if (!value.is_number()) throw InvalidArgument(where + ".params." + key + ": expected a number");
        params[key] = value.get<double>();
      }
    }
    RecommenderSpec spec;
    try {
      spec = RecommenderSpec::make(alg, params);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where + ".params: " + e.what());
    }
    list.push_back({arr[k].contains("name") ? get_as<std::string>(arr[k], "name", where)
                                            : std::string(algorithm_name(alg)),
                    std::move(spec)});
  }
  return CandidateSet(std::move(list));
}

}  // namespace

std::string ratio_tag(double ratio) { return "r" + std::to_string(std::lround(ratio * 100.0)); }

void ExperimentConfig::validate() const {
  if (dataset.ratings.empty()) throw InvalidArgument("dataset.ratings: required");
  if (dataset.format == DatasetFormat::MovieLens && (dataset.users.empty() || dataset.items.empty())) {
    throw InvalidArgument("dataset.users / dataset.items: required for the movielens format");
  }
  if (cold_start.enabled) {
    if (cold_start.min_keep < 1) throw InvalidArgument("cold_start.min_keep: must be >= 1");
    if (cold_start.max_keep && *cold_start.max_keep < cold_start.min_keep) {
      throw InvalidArgument("cold_start.max_keep: must be >= min_keep");
    }
  }
  if (!(outer_train_ratio > 0.0 && outer_train_ratio < 1.0)) {
    throw InvalidArgument("split.outer_train_ratio: must be in (0, 1)");
  }
  if (inner_ratios.empty()) throw InvalidArgument("split.inner_ratios: must not be empty");
  std::set<std::string> tags;
  for (double r : inner_ratios) {
    if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("split.inner_ratios: values must be in (0, 1)");
    if (!tags.insert(ratio_tag(r)).second) {
      throw InvalidArgument("split.inner_ratios: duplicate ratio " + format_number(r));
    }
  }
  forest.validate();
  relevance.validate();
  context.validate();
  if (output_dir.empty()) throw InvalidArgument("output_dir: required");
}

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config: not valid JSON: ") + e.what());
  }
  check_keys(root,
             {"schema_version", "dataset", "cold_start", "min_ratings", "candidates", "split",
              "forest", "relevance", "context", "output_dir", "seed", "threads"},
             "");
  if (!root.contains("schema_version")) throw InvalidArgument("schema_version: required");
  if (get_as<int>(root, "schema_version", "config") != kConfigSchemaVersion) {
    throw InvalidArgument("schema_version: unsupported (expected " +
                          std::to_string(kConfigSchemaVersion) + ")");
  }

  ExperimentConfig c;
  if (!root.contains("dataset")) throw InvalidArgument("dataset: required");
  {
    const auto& d = root["dataset"];
    check_keys(d, {"format", "ratings", "users", "items", "metadata", "malformed_tolerance"},
               "dataset");
    const auto format = d.contains("format") ? get_as<std::string>(d, "format", "dataset") : "movielens";
    if (format == "movielens") {
      c.dataset.format = DatasetFormat::MovieLens;
    } else if (format == "generic") {
      c.dataset.format = DatasetFormat::Generic;
    } else if (format == "canonical") {
      c.dataset.format = DatasetFormat::Canonical;
    } else {
      throw InvalidArgument("dataset.format: expected movielens, generic or canonical");
    }
    c.dataset.ratings = resolve(base_dir, get_as<std::string>(d, "ratings", "dataset"));
    if (d.contains("users")) c.dataset.users = resolve(base_dir, get_as<std::string>(d, "users", "dataset"));
    if (d.contains("items")) c.dataset.items = resolve(base_dir, get_as<std::string>(d, "items", "dataset"));
    if (d.contains("metadata") && !d["metadata"].is_null()) {
      c.dataset.metadata = resolve(base_dir, get_as<std::string>(d, "metadata", "dataset"));
    }
    read_count(d, "malformed_tolerance", "dataset", c.dataset.malformed_tolerance);
  }
  if (root.contains("cold_start")) {
    const auto& s = root["cold_start"];
    check_keys(s, {"enabled", "min_keep", "max_keep"}, "cold_start");
    read_opt(s, "enabled", "cold_start", c.cold_start.enabled);
    read_count(s, "min_keep", "cold_start", c.cold_start.min_keep);
    read_opt_count(s, "max_keep", "cold_start", c.cold_start.max_keep);
  }
  read_count(root, "min_ratings", "config", c.min_ratings);
  if (root.contains("candidates")) {
    c.candidates = parse_candidates(root["candidates"]);
    c.preset = root["candidates"].contains("preset") ? root["candidates"]["preset"].get<std::string>()
                                                      : "";
  }
  if (root.contains("split")) {
    const auto& s = root["split"];
    check_keys(s, {"outer_train_ratio", "inner_ratios", "mode"}, "split");
    read_opt(s, "outer_train_ratio", "split", c.outer_train_ratio);
    read_opt(s, "inner_ratios", "split", c.inner_ratios);
    if (s.contains("mode")) {
      const auto mode = get_as<std::string>(s, "mode", "split");
      if (mode == "chronological") {
        c.split_mode = InnerSplitMode::Chronological;
      } else if (mode == "random") {
        c.split_mode = InnerSplitMode::Random;
      } else {
        throw InvalidArgument("split.mode: expected chronological or random");
      }
    }
  }
  if (root.contains("forest")) {
    const auto& f = root["forest"];
    check_keys(f,
               {"n_estimators", "max_depth", "min_samples_split", "min_samples_leaf",
                "max_features", "bootstrap", "balanced_class_weight"},
               "forest");
    read_count(f, "n_estimators", "forest", c.forest.n_estimators);
    read_opt_count(f, "max_depth", "forest", c.forest.max_depth);
    read_count(f, "min_samples_split", "forest", c.forest.min_samples_split);
    read_count(f, "min_samples_leaf", "forest", c.forest.min_samples_leaf);
    read_opt_count(f, "max_features", "forest", c.forest.max_features);
    read_opt(f, "bootstrap", "forest", c.forest.bootstrap);
    read_opt(f, "balanced_class_weight", "forest", c.forest.balanced_class_weight);
  }
  if (root.contains("relevance")) {
    const auto& r = root["relevance"];
    check_keys(r, {"threshold", "gain", "cutoffs", "ndcg_cutoff"}, "relevance");
    read_opt(r, "threshold", "relevance", c.relevance.threshold);
    if (r.contains("gain")) {
      const auto gain = get_as<std::string>(r, "gain", "relevance");
      if (gain == "graded") {
        c.relevance.gain = GainMode::Graded;
      } else if (gain == "binary") {
        c.relevance.gain = GainMode::Binary;
      } else {
        throw InvalidArgument("relevance.gain: expected graded or binary");
      }
    }
    read_opt(r, "cutoffs", "relevance", c.relevance.cutoffs);
    read_count(r, "ndcg_cutoff", "relevance", c.relevance.ndcg_cutoff);
  }
  if (root.contains("context")) {
    const auto& x = root["context"];
    check_keys(x, {"genre_components", "keyword_components", "keyword_vocab_cap", "include_age"},
               "context");
    read_count(x, "genre_components", "context", c.context.genre_components);
    read_count(x, "keyword_components", "context", c.context.keyword_components);
    read_count(x, "keyword_vocab_cap", "context", c.context.keyword_vocab_cap);
    read_opt(x, "include_age", "context", c.context.include_age);
  }
  if (root.contains("output_dir")) {
    c.output_dir = resolve(base_dir, get_as<std::string>(root, "output_dir", "config"));
  } else {
    c.output_dir = resolve(base_dir, "out");
  }
  read_opt(root, "seed", "config", c.seed);
  read_opt(root, "threads", "config", c.threads);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw InvalidArgument("config file not found: " + path.string());
  }
  auto base = std::filesystem::absolute(path).parent_path();
  return parse_config(read_file(path), base);
}

ConfigOverrides overrides_from_env() {
  ConfigOverrides o;
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  auto bad = [](const char* name) { return InvalidArgument(std::string(name) + ": invalid value"); };
  if (auto v = env("METAHYBRID_OUT")) o.output_dir = *v;
  if (auto v = env("METAHYBRID_SEED")) {
    auto x = parse_int<std::uint64_t>(*v);
    if (!x) throw bad("METAHYBRID_SEED");
    o.seed = *x;
  }
  if (auto v = env("METAHYBRID_THREADS")) {
    auto x = parse_int<unsigned>(*v);
    if (!x) throw bad("METAHYBRID_THREADS");
    o.threads = *x;
  }
  if (auto v = env("METAHYBRID_PRESET")) o.preset = *v;
  if (auto v = env("METAHYBRID_INNER_RATIO")) {
    auto x = parse_double(*v);
    if (!x) throw bad("METAHYBRID_INNER_RATIO");
    o.inner_ratio = *x;
  }
  if (auto v = env("METAHYBRID_NDCG_CUTOFF")) {
    auto x = parse_int<std::size_t>(*v);
    if (!x) throw bad("METAHYBRID_NDCG_CUTOFF");
    o.ndcg_cutoff = *x;
  }
  return o;
}

void apply_overrides(ExperimentConfig& config, const ConfigOverrides& o) {
  if (o.output_dir) config.output_dir = *o.output_dir;
  if (o.seed) config.seed = *o.seed;
  if (o.threads) config.threads = *o.threads;
  if (o.preset) {
    config.candidates = CandidateSet::preset(*o.preset);
    config.preset = *o.preset;
  }
  if (o.inner_ratio) config.inner_ratios = {*o.inner_ratio};
  if (o.ndcg_cutoff) config.relevance.ndcg_cutoff = *o.ndcg_cutoff;
  config.validate();
}

}  // namespace metahybrid
