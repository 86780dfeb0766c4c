#include "metahybrid/context.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "metahybrid/parallel.hpp"
#include "metahybrid/text.hpp"

namespace metahybrid {
namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

/// Mode of `counts`, ties to the smallest value; nullopt when all zero.
template <std::size_t N>
std::optional<int> mode_of(const std::array<std::size_t, N>& counts) {
  std::optional<int> best;
  for (std::size_t v = 0; v < N; ++v) {
    if (counts[v] > 0 && (!best || counts[v] > counts[static_cast<std::size_t>(*best)])) {
      best = static_cast<int>(v);
    }
  }
  return best;
}

std::string two_digits(std::size_t v) {
  return (v < 10 ? "0" : "") + std::to_string(v);
}

void normalize_histogram(std::map<std::string, double>& h) {
  double total = 0.0;
  for (const auto& [k, v] : h) total += v;
  if (total > 0.0) {
    for (auto& [k, v] : h) v /= total;
  }
}

}  // namespace

ContextExtractor::ContextExtractor(const Dataset& dataset) : dataset_(&dataset) {
  for (const auto& [id, item] : dataset.items) {
    if (item.runtime_minutes) max_runtime_ = std::max(max_runtime_, double(*item.runtime_minutes));
  }
}

RawContextFeatures ContextExtractor::extract(UserId user, std::span<const RatingEvent> slice) const {
  RawContextFeatures f;
  f.user = user;
  if (auto it = dataset_->users.find(user); it != dataset_->users.end()) {
    f.gender = it->second.gender;
    f.age_band = it->second.age_band;
    f.occupation = it->second.occupation;
    if (const auto& loc = it->second.location; loc && !loc->empty() && loc->front() >= '0' &&
                                               loc->front() <= '9') {
      f.location_region = loc->front() - '0';
    }
  }
  f.n_ratings = slice.size();
  if (slice.empty()) return f;

  std::array<std::size_t, 24> hours{};
  std::array<std::size_t, 7> days{};
  std::vector<double> years;
  double runtime_sum = 0.0;
  std::size_t runtime_n = 0;
  for (const auto& r : slice) {
    if (r.user != user) throw InvalidArgument("extract_raw: slice contains another user's rating");
    const auto bucket = static_cast<std::size_t>(
        std::clamp(std::lround(r.rating), long{1}, long{5}) - 1);
    f.rating_histogram[bucket] += 1.0;

    const std::int64_t day = floor_div(r.timestamp, kSecondsPerDay);
    const std::int64_t second_of_day = r.timestamp - day * kSecondsPerDay;
    ++hours[static_cast<std::size_t>(second_of_day / 3600)];
    ++days[static_cast<std::size_t>(((day + 4) % 7 + 7) % 7)];

    auto it = dataset_->items.find(r.item);
    if (it == dataset_->items.end()) continue;
    const ItemRecord& item = it->second;
    if (item.year) years.push_back(*item.year);
    if (item.runtime_minutes && max_runtime_ > 0.0) {
      runtime_sum += *item.runtime_minutes / max_runtime_;
      ++runtime_n;
    }
    for (const auto& g : item.genres) f.genre_histogram[g] += 1.0;
    for (const auto& k : item.keywords) f.keyword_histogram[k] += 1.0;
  }
  for (auto& h : f.rating_histogram) h /= static_cast<double>(slice.size());

  if (!years.empty()) {
    double mean = 0.0;
    for (double y : years) mean += y;
    mean /= static_cast<double>(years.size());
    for (double y : years) f.year_variance += (y - mean) * (y - mean);
    f.year_variance /= static_cast<double>(years.size());
  }
  if (runtime_n > 0) f.mean_runtime_norm = runtime_sum / static_cast<double>(runtime_n);

  normalize_histogram(f.genre_histogram);
  normalize_histogram(f.keyword_histogram);
  f.n_unique_genres = f.genre_histogram.size();
  for (const auto& [g, p] : f.genre_histogram) {
    if (p > 0.0) f.genre_entropy -= p * std::log(p);
  }
  f.preferred_hour = mode_of(hours);
  f.preferred_dow = mode_of(days);
  return f;
}

RawContextFeatures extract_raw(UserId user, std::span<const RatingEvent> slice,
                               const Dataset& dataset) {
  return ContextExtractor(dataset).extract(user, slice);
}

std::vector<RawContextFeatures> extract_all(const Dataset& dataset, std::span<const UserId> users,
                                            std::span<const RatingEvent> slice, unsigned threads) {
  std::unordered_map<UserId, std::vector<RatingEvent>> by_user;
  for (const auto& r : slice) by_user[r.user].push_back(r);
  const ContextExtractor extractor(dataset);
  std::vector<RawContextFeatures> out(users.size());
  static const std::vector<RatingEvent> kEmpty;
  parallel_for(users.size(), threads, [&](std::size_t k) {
    auto it = by_user.find(users[k]);
    out[k] = extractor.extract(users[k], it == by_user.end() ? kEmpty : it->second);
  });
  return out;
}

void ContextConfig::validate() const {
  if (genre_components == 0) throw InvalidArgument("context.genre_components must be >= 1");
  if (keyword_components == 0) throw InvalidArgument("context.keyword_components must be >= 1");
  if (keyword_vocab_cap == 0) throw InvalidArgument("context.keyword_vocab_cap must be >= 1");
}

void ContextModel::build_schema() {
  names_.clear();
  sources_.clear();
  auto add = [&](std::string name, const std::string& source) {
    names_.push_back(std::move(name));
    sources_.push_back(source);
  };
  add("n_ratings", "n_ratings");
  add("year_variance", "metadata_variance");
  add("genre_entropy", "metadata_variance");
  add("n_unique_genres", "n_unique_categories");
  add("mean_runtime_norm", "movie_length");
  for (int r = 1; r <= 5; ++r) add("rating_hist_" + std::to_string(r), "rating_histogram");
  for (std::size_t h = 0; h < 24; ++h) add("hour_" + two_digits(h), "preferred_hour");
  for (std::size_t d = 0; d < 7; ++d) add("dow_" + std::to_string(d), "preferred_dow");
  add("gender_M", "gender");
  add("gender_F", "gender");
  add("gender_unknown", "gender");
  if (config_.include_age) {
    for (int a : kAgeBands) add("age_" + std::to_string(a), "age");
    add("age_unknown", "age");
  }
  for (std::size_t o = 0; o < kOccupationCodes; ++o) add("occupation_" + two_digits(o), "occupation");
  add("occupation_unknown", "occupation");
  for (int l = 0; l < 10; ++l) add("location_" + std::to_string(l), "location");
  add("location_unknown", "location");
  for (std::size_t k = 1; k <= config_.genre_components; ++k) add("genre_pca_" + two_digits(k), "genres");
  for (std::size_t k = 1; k <= config_.keyword_components; ++k) {
    add("keyword_pca_" + two_digits(k), "keywords");
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) throw Error("context schema: duplicate feature name " + n);
  }
}

namespace {

std::vector<double> histogram_vector(const std::map<std::string, double>& h,
                                     const std::vector<std::string>& vocab) {
  std::vector<double> v(vocab.size(), 0.0);
  for (std::size_t k = 0; k < vocab.size(); ++k) {
    if (auto it = h.find(vocab[k]); it != h.end()) v[k] = it->second;
  }
  return v;
}

PcaModel fit_block(const std::vector<std::vector<double>>& rows, std::size_t k, const char* what,
                   std::vector<std::string>* warnings) {
  const std::size_t d = rows.empty() ? 0 : rows.front().size();
  const std::size_t k_eff = std::min({k, rows.size(), d});
  if (k_eff < k && warnings) {
    warnings->push_back(std::string("context: ") + what + " PCA keeps " + std::to_string(k_eff) +
                        " of " + std::to_string(k) + " components (" +
                        std::to_string(rows.size()) + " users, " + std::to_string(d) +
                        " dimensions); the rest are zero");
  }
  if (k_eff == 0 || rows.size() < 2) {
    PcaModel empty;
    empty.mean.assign(d, 0.0);
    empty.components = Matrix(0, d);
    return empty;
  }
  Matrix m;
  m.cols = d;
  for (const auto& r : rows) m.push_row(r);
  return fit_pca(m, k_eff, warnings);
}

}  // namespace

ContextModel fit_context_model(std::span<const RawContextFeatures> training_users,
                               const Dataset& dataset, const ContextConfig& config,
                               std::vector<std::string>* warnings) {
  config.validate();
  ContextModel model;
  model.config_ = config;

  std::set<std::string> genres;
  std::map<std::string, std::size_t> keyword_freq;
  for (const auto& [id, item] : dataset.items) {
    genres.insert(item.genres.begin(), item.genres.end());
    for (const auto& k : item.keywords) ++keyword_freq[k];
  }
  model.genre_vocab_.assign(genres.begin(), genres.end());
  std::vector<std::pair<std::string, std::size_t>> kw(keyword_freq.begin(), keyword_freq.end());
  std::stable_sort(kw.begin(), kw.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (kw.size() > config.keyword_vocab_cap) {
    if (warnings) {
      warnings->push_back("context: keyword universe capped at " +
                          std::to_string(config.keyword_vocab_cap) + " of " +
                          std::to_string(kw.size()) + " keywords");
    }
    kw.resize(config.keyword_vocab_cap);
  }
  for (const auto& [k, n] : kw) model.keyword_vocab_.push_back(k);

  std::vector<std::vector<double>> genre_rows, keyword_rows;
  for (const auto& raw : training_users) {
    genre_rows.push_back(histogram_vector(raw.genre_histogram, model.genre_vocab_));
    keyword_rows.push_back(histogram_vector(raw.keyword_histogram, model.keyword_vocab_));
  }
  model.genre_pca_ = fit_block(genre_rows, config.genre_components, "genre", warnings);
  model.keyword_pca_ = fit_block(keyword_rows, config.keyword_components, "keyword", warnings);
  model.build_schema();
  return model;
}

std::vector<double> ContextModel::encode(const RawContextFeatures& raw) const {
  std::vector<double> v;
  v.reserve(names_.size());
  v.push_back(static_cast<double>(raw.n_ratings));
  v.push_back(raw.year_variance);
  v.push_back(raw.genre_entropy);
  v.push_back(static_cast<double>(raw.n_unique_genres));
  v.push_back(raw.mean_runtime_norm);
  v.insert(v.end(), raw.rating_histogram.begin(), raw.rating_histogram.end());

  auto one_hot = [&v](std::size_t n, std::optional<std::size_t> hot) {
    for (std::size_t k = 0; k < n; ++k) v.push_back(hot && *hot == k ? 1.0 : 0.0);
  };
  auto as_index = [](std::optional<int> x) -> std::optional<std::size_t> {
    if (!x) return std::nullopt;
    return static_cast<std::size_t>(*x);
  };
  one_hot(24, as_index(raw.preferred_hour));
  one_hot(7, as_index(raw.preferred_dow));
  one_hot(3, static_cast<std::size_t>(raw.gender));  // Male, Female, Unknown
  if (config_.include_age) {
    std::size_t slot = kAgeBands.size();
    if (raw.age_band) {
      auto it = std::find(kAgeBands.begin(), kAgeBands.end(), *raw.age_band);
      if (it != kAgeBands.end()) slot = static_cast<std::size_t>(it - kAgeBands.begin());
    }
    one_hot(kAgeBands.size() + 1, slot);
  }
  {
    std::size_t slot = kOccupationCodes;
    if (raw.occupation && *raw.occupation >= 0 && *raw.occupation < kOccupationCodes) {
      slot = static_cast<std::size_t>(*raw.occupation);
    }
    one_hot(kOccupationCodes + 1, slot);
  }
  {
    std::size_t slot = 10;
    if (raw.location_region && *raw.location_region >= 0 && *raw.location_region <= 9) {
      slot = static_cast<std::size_t>(*raw.location_region);
    }
    one_hot(11, slot);
  }

  auto project = [&v](const PcaModel& pca, const std::vector<double>& row, std::size_t width) {
    std::vector<double> scores;
    if (pca.n_components() > 0) scores = pca.transform(row);
    scores.resize(width, 0.0);
    v.insert(v.end(), scores.begin(), scores.end());
  };
  project(genre_pca_, histogram_vector(raw.genre_histogram, genre_vocab_), config_.genre_components);
  project(keyword_pca_, histogram_vector(raw.keyword_histogram, keyword_vocab_),
          config_.keyword_components);
  return v;
}

void ContextModel::save(ArchiveWriter& out) const {
  out.put<std::uint64_t>(config_.genre_components);
  out.put<std::uint64_t>(config_.keyword_components);
  out.put<std::uint64_t>(config_.keyword_vocab_cap);
  out.put<std::uint8_t>(config_.include_age ? 1 : 0);
  out.put<std::uint64_t>(genre_vocab_.size());
  for (const auto& g : genre_vocab_) out.put_string(g);
  out.put<std::uint64_t>(keyword_vocab_.size());
  for (const auto& k : keyword_vocab_) out.put_string(k);
  genre_pca_.save(out);
  keyword_pca_.save(out);
}

ContextModel ContextModel::load(ArchiveReader& in) {
  ContextModel m;
  m.config_.genre_components = in.get<std::uint64_t>();
  m.config_.keyword_components = in.get<std::uint64_t>();
  m.config_.keyword_vocab_cap = in.get<std::uint64_t>();
  m.config_.include_age = in.get<std::uint8_t>() != 0;
  m.genre_vocab_.resize(in.get<std::uint64_t>());
  for (auto& g : m.genre_vocab_) g = in.get_string();
  m.keyword_vocab_.resize(in.get<std::uint64_t>());
  for (auto& k : m.keyword_vocab_) k = in.get_string();
  m.genre_pca_ = PcaModel::load(in);
  m.keyword_pca_ = PcaModel::load(in);
  if (m.genre_pca_.dimension() != m.genre_vocab_.size() ||
      m.keyword_pca_.dimension() != m.keyword_vocab_.size()) {
    throw IngestError("context archive: PCA dimension does not match vocabulary");
  }
  m.build_schema();
  return m;
}

ContextMatrix assemble_matrix(const ContextModel& model, std::span<const RawContextFeatures> raw) {
  ContextMatrix out;
  out.names = model.feature_names();
  out.values = Matrix(0, model.width());
  for (const auto& r : raw) {
    out.users.push_back(r.user);
    out.values.push_row(model.encode(r));
  }
  return out;
}

std::span<const double> ContextMatrix::row_of(UserId user) const {
  auto it = std::find(users.begin(), users.end(), user);
  if (it == users.end()) {
    throw InvalidArgument("context matrix has no row for user " + std::to_string(user.value));
  }
  return values.row(static_cast<std::size_t>(it - users.begin()));
}

std::string ContextMatrix::to_csv() const {
  std::ostringstream out;
  out << "user";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < users.size(); ++r) {
    out << users[r].value;
    for (double v : values.row(r)) out << ',' << format_number(v);
    out << '\n';
  }
  return out.str();
}

ContextMatrix ContextMatrix::from_csv(const std::string& text) {
  ContextMatrix m;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IngestError("context csv: empty file");
  auto header = split(strip_cr(line), ',');
  if (header.empty() || header.front() != "user") throw IngestError("context csv: bad header");
  for (std::size_t k = 1; k < header.size(); ++k) m.names.emplace_back(header[k]);
  m.values = Matrix(0, m.names.size());
  std::vector<double> row(m.names.size());
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (trim(line).empty()) continue;
    auto fields = split(strip_cr(line), ',');
    const auto user = fields.empty() ? std::nullopt : parse_int<std::int64_t>(fields[0]);
    if (fields.size() != header.size() || !user) {
      throw IngestError("context csv: malformed line " + std::to_string(line_no));
    }
    for (std::size_t k = 1; k < fields.size(); ++k) {
      auto v = parse_double(fields[k]);
      if (!v) throw IngestError("context csv: bad number on line " + std::to_string(line_no));
      row[k - 1] = *v;
    }
    m.users.emplace_back(*user);
    m.values.push_row(row);
  }
  return m;
}

}  // namespace metahybrid
