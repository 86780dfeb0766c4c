#include "metahybrid/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "metahybrid/rng.hpp"
#include "metahybrid/text.hpp"

namespace metahybrid {
namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IngestError("missing file: " + path.string());
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open file: " + path.string());
  return in;
}

/// Counts a bad line and fails once the tolerance is exceeded.
void reject_line(const std::filesystem::path& path, std::size_t line_no, const std::string& why,
                 const LoadOptions& options, IngestReport& report) {
  ++report.malformed_lines;
  const std::string where = path.filename().string() + ":" + std::to_string(line_no);
  if (report.malformed_lines > options.malformed_tolerance) {
    throw IngestError(where + ": " + why);
  }
  report.warnings.push_back(where + ": skipped, " + why);
}

Gender parse_gender(std::string_view s) {
  if (s == "M") return Gender::Male;
  if (s == "F") return Gender::Female;
  return Gender::Unknown;
}

std::string_view gender_code(Gender g) {
  switch (g) {
    case Gender::Male:
      return "M";
    case Gender::Female:
      return "F";
    case Gender::Unknown:
      break;
  }
  return "U";
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::erase_if(v, [](const std::string& s) { return s.empty(); });
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

void finish_ratings(Dataset& ds, const std::filesystem::path& path, const LoadOptions& options,
                    IngestReport& report, std::vector<std::pair<RatingEvent, std::size_t>> lines) {
  std::set<std::pair<UserId, ItemId>> seen;
  for (auto& [event, line_no] : lines) {
    if (!ds.users.contains(event.user)) {
      reject_line(path, line_no, "unknown user " + std::to_string(event.user.value), options, report);
      continue;
    }
    if (!ds.items.contains(event.item)) {
      reject_line(path, line_no, "unknown item " + std::to_string(event.item.value), options, report);
      continue;
    }
    if (!seen.emplace(event.user, event.item).second) {
      reject_line(path, line_no, "duplicate (user, item) pair", options, report);
      continue;
    }
    ds.ratings.push_back(event);
  }
  ds.normalize();
}

std::optional<RatingEvent> parse_rating_fields(const std::vector<std::string_view>& f,
                                               std::string& why) {
  if (f.size() != 4) {
    why = "expected 4 fields, found " + std::to_string(f.size());
    return std::nullopt;
  }
  const auto user = parse_int<std::int64_t>(f[0]);
  const auto item = parse_int<std::int64_t>(f[1]);
  const auto rating = parse_int<int>(f[2]);
  const auto ts = parse_int<std::int64_t>(f[3]);
  if (!user || !item || !rating || !ts) {
    why = "non-integer field";
    return std::nullopt;
  }
  if (*rating < 1 || *rating > 5) {
    why = "rating out of range 1..5";
    return std::nullopt;
  }
  if (*ts <= 0) {
    why = "non-positive timestamp";
    return std::nullopt;
  }
  return RatingEvent{UserId(*user), ItemId(*item), static_cast<double>(*rating), *ts};
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Canonical text escaping: backslash, tab, newline, and the list separator.
std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\':
        out += "\\\\";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\r':
        out += "\\r";
        break;
      case '|':
        out += "\\p";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    switch (s[++i]) {
      case 't':
        out += '\t';
        break;
      case 'n':
        out += '\n';
        break;
      case 'r':
        out += '\r';
        break;
      case 'p':
        out += '|';
        break;
      default:
        out += s[i];
    }
  }
  return out;
}

constexpr std::string_view kMissing = "\\N";

template <typename T>
std::string opt_num(const std::optional<T>& v) {
  return v ? format_number(*v) : std::string(kMissing);
}

std::string opt_text(const std::optional<std::string>& v) {
  return v ? escape(*v) : std::string(kMissing);
}

std::string join_list(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += '|';
    out += escape(v[i]);
  }
  return out;
}

std::vector<std::string> read_list(std::string_view s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  for (auto part : split(s, '|')) out.push_back(unescape(part));
  return out;
}

template <typename T>
std::optional<T> read_opt_int(std::string_view s, std::size_t line_no) {
  if (s == kMissing) return std::nullopt;
  auto v = parse_int<T>(s);
  if (!v) throw IngestError("canonical:" + std::to_string(line_no) + ": bad integer");
  return v;
}

std::optional<double> read_opt_double(std::string_view s, std::size_t line_no) {
  if (s == kMissing) return std::nullopt;
  auto v = parse_double(s);
  if (!v) throw IngestError("canonical:" + std::to_string(line_no) + ": bad number");
  return v;
}

std::optional<std::string> read_opt_text(std::string_view s) {
  if (s == kMissing) return std::nullopt;
  return unescape(s);
}

}  // namespace

void Dataset::normalize() {
  std::sort(ratings.begin(), ratings.end(), [](const RatingEvent& a, const RatingEvent& b) {
    if (a.user != b.user) return a.user < b.user;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.item < b.item;
  });
}

void Dataset::validate() const {
  std::set<std::pair<UserId, ItemId>> seen;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    const auto& r = ratings[i];
    if (!users.contains(r.user)) throw InvalidArgument("rating references unknown user");
    if (!items.contains(r.item)) throw InvalidArgument("rating references unknown item");
    if (r.rating < kMinRating || r.rating > kMaxRating) throw InvalidArgument("rating out of range");
    if (r.timestamp <= 0) throw InvalidArgument("non-positive timestamp");
    if (!seen.emplace(r.user, r.item).second) throw InvalidArgument("duplicate (user, item) rating");
    if (i > 0) {
      const auto& p = ratings[i - 1];
      if (std::tie(p.user, p.timestamp, p.item) > std::tie(r.user, r.timestamp, r.item)) {
        throw InvalidArgument("ratings not sorted by (user, timestamp)");
      }
    }
  }
}

std::map<UserId, std::vector<RatingEvent>> Dataset::ratings_by_user() const {
  std::map<UserId, std::vector<RatingEvent>> out;
  for (const auto& r : ratings) out[r.user].push_back(r);
  return out;
}

void Dataset::append_provenance(const std::string& step) {
  if (!provenance.empty()) provenance += "; ";
  provenance += step;
}

std::pair<std::string, std::optional<int>> split_title_year(const std::string& raw) {
  const std::string t = std::string(trim(raw));
  if (t.size() >= 6 && t.back() == ')') {
    const auto open = t.rfind('(');
    if (open != std::string::npos && t.size() - open == 6) {
      if (auto year = parse_int<int>(std::string_view(t).substr(open + 1, 4))) {
        return {std::string(trim(std::string_view(t).substr(0, open))), year};
      }
    }
  }
  return {t, std::nullopt};
}

Dataset load_movielens(const std::filesystem::path& ratings_path,
                       const std::filesystem::path& users_path,
                       const std::filesystem::path& items_path, const LoadOptions& options,
                       IngestReport* report_out) {
  IngestReport report;
  Dataset ds;

  {
    auto in = open_input(users_path);
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
      ++report.lines_read;
      if (trim(line).empty()) continue;
      const auto f = split(strip_cr(line), "::");
      const auto id = f.size() == 5 ? parse_int<std::int64_t>(f[0]) : std::nullopt;
      if (!id || ds.users.contains(UserId(*id))) {
        reject_line(users_path, line_no, id ? "duplicate user id" : "malformed user line", options,
                    report);
        continue;
      }
      UserRecord u;
      u.id = UserId(*id);
      u.gender = parse_gender(f[1]);
      u.age_band = parse_int<int>(f[2]);
      u.occupation = parse_int<int>(f[3]);
      if (!trim(f[4]).empty()) u.location = std::string(trim(f[4]));
      ds.users.emplace(u.id, std::move(u));
    }
  }

  {
    auto in = open_input(items_path);
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
      ++report.lines_read;
      if (trim(line).empty()) continue;
      const auto f = split(strip_cr(line), "::");
      const auto id = f.size() == 3 ? parse_int<std::int64_t>(f[0]) : std::nullopt;
      if (!id || ds.items.contains(ItemId(*id))) {
        reject_line(items_path, line_no, id ? "duplicate item id" : "malformed item line", options,
                    report);
        continue;
      }
      ItemRecord item;
      item.id = ItemId(*id);
      auto [title, year] = split_title_year(std::string(f[1]));
      item.title = std::move(title);
      item.year = year;
      for (auto g : split(f[2], '|')) item.genres.emplace_back(trim(g));
      item.genres = sorted_unique(std::move(item.genres));
      ds.items.emplace(item.id, std::move(item));
    }
  }

  std::vector<std::pair<RatingEvent, std::size_t>> events;
  {
    auto in = open_input(ratings_path);
    std::string line;
    std::string why;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
      ++report.lines_read;
      if (trim(line).empty()) continue;
      if (auto e = parse_rating_fields(split(strip_cr(line), "::"), why)) {
        events.emplace_back(*e, line_no);
      } else {
        reject_line(ratings_path, line_no, why, options, report);
      }
    }
  }
  finish_ratings(ds, ratings_path, options, report, std::move(events));

  const auto with_genres = std::count_if(ds.items.begin(), ds.items.end(),
                                         [](const auto& kv) { return !kv.second.genres.empty(); });
  if (!ds.items.empty() && static_cast<double>(with_genres) < 0.95 * static_cast<double>(ds.items.size())) {
    report.warnings.push_back("fewer than 95% of items carry genres");
  }

  ds.provenance = "movielens(" + ratings_path.filename().string() + ")";
  if (report_out) *report_out = std::move(report);
  return ds;
}

Dataset load_generic_ratings(const std::filesystem::path& ratings_path, const LoadOptions& options,
                             IngestReport* report_out) {
  IngestReport report;
  Dataset ds;
  auto in = open_input(ratings_path);
  std::string line;
  if (!std::getline(in, line)) throw IngestError(ratings_path.string() + ": empty file");
  ++report.lines_read;
  const auto header = split(strip_cr(line), ',');
  if (header.size() != 4 || trim(header[0]) != "user" || trim(header[1]) != "item" ||
      trim(header[2]) != "rating" || trim(header[3]) != "timestamp") {
    throw IngestError(ratings_path.filename().string() +
                      ":1: expected header user,item,rating,timestamp");
  }
  std::vector<std::pair<RatingEvent, std::size_t>> events;
  std::string why;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    ++report.lines_read;
    if (trim(line).empty()) continue;
    auto fields = split(strip_cr(line), ',');
    for (auto& f : fields) f = trim(f);
    if (auto e = parse_rating_fields(fields, why)) {
      UserRecord user;
      user.id = e->user;
      ds.users.try_emplace(e->user, std::move(user));
      ItemRecord item;
      item.id = e->item;
      ds.items.try_emplace(e->item, std::move(item));
      events.emplace_back(*e, line_no);
    } else {
      reject_line(ratings_path, line_no, why, options, report);
    }
  }
  finish_ratings(ds, ratings_path, options, report, std::move(events));
  ds.provenance = "generic(" + ratings_path.filename().string() + ")";
  if (report_out) *report_out = std::move(report);
  return ds;
}

Dataset enrich_items(Dataset ds, const std::filesystem::path& metadata_path,
                     EnrichmentReport* report_out) {
  EnrichmentReport report;
  auto in = open_input(metadata_path);
  std::string line;
  if (!std::getline(in, line)) throw IngestError(metadata_path.string() + ": empty file");

  const auto header = split(strip_cr(line), '\t');
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = i;
  static const char* const kRequired[] = {"item_id", "title",    "year",   "keywords", "runtime",
                                          "cast",    "language", "budget", "profit",   "plot"};
  for (const char* name : kRequired) {
    if (!col.contains(name)) {
      throw IngestError(metadata_path.filename().string() + ":1: missing column '" + name + "'");
    }
  }
  const bool has_vote = col.contains("vote_average");

  // (lowercased title) -> items with that title, for the fallback match
  std::unordered_map<std::string, std::vector<ItemId>> by_title;
  for (const auto& [id, item] : ds.items) by_title[lower(item.title)].push_back(id);

  std::set<ItemId> matched;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (trim(line).empty()) continue;
    const auto f = split(strip_cr(line), '\t');
    const std::string where = metadata_path.filename().string() + ":" + std::to_string(line_no);
    if (f.size() != header.size()) {
      throw IngestError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                        std::to_string(f.size()));
    }
    auto field = [&](const char* name) { return trim(f[col.at(name)]); };
    auto opt_int = [&](const char* name) -> std::optional<int> {
      const auto s = field(name);
      if (s.empty()) return std::nullopt;
      auto v = parse_int<int>(s);
      if (!v) throw IngestError(where + ": bad integer in column '" + name + "'");
      return v;
    };
    auto opt_double = [&](const char* name) -> std::optional<double> {
      const auto s = field(name);
      if (s.empty()) return std::nullopt;
      auto v = parse_double(s);
      if (!v) throw IngestError(where + ": bad number in column '" + name + "'");
      return v;
    };

    const auto year = opt_int("year");
    std::optional<ItemId> target;
    bool by_id = false;
    if (const auto id_text = field("item_id"); !id_text.empty()) {
      auto id = parse_int<std::int64_t>(id_text);
      if (!id) throw IngestError(where + ": bad item_id");
      if (ds.items.contains(ItemId(*id))) {
        target = ItemId(*id);
        by_id = true;
      }
    }
    if (!target) {
      if (auto it = by_title.find(lower(field("title"))); it != by_title.end()) {
        for (ItemId candidate : it->second) {
          const auto& cy = ds.items.at(candidate).year;
          if (!year || !cy || std::abs(*cy - *year) <= 1) {
            target = candidate;
            break;
          }
        }
      }
    }
    if (!target) continue;
    if (!matched.insert(*target).second) {
      report.warnings.push_back(where + ": item already enriched, row ignored");
      continue;
    }
    ++(by_id ? report.matched_by_id : report.matched_by_title);

    ItemRecord& item = ds.items.at(*target);
    std::vector<std::string> keywords;
    for (auto k : split(field("keywords"), '|')) keywords.emplace_back(trim(k));
    item.keywords = sorted_unique(std::move(keywords));
    item.cast.clear();
    for (auto c : split(field("cast"), '|')) {
      if (!trim(c).empty()) item.cast.emplace_back(trim(c));
    }
    item.runtime_minutes = opt_int("runtime");
    if (!field("language").empty()) item.language = std::string(field("language"));
    item.budget = opt_double("budget");
    item.profit = opt_double("profit");
    if (has_vote) item.vote_average = opt_double("vote_average");
    if (!field("plot").empty()) item.plot = std::string(field("plot"));
    if (!item.year && year) item.year = year;
  }

  report.unmatched_items = ds.items.size() - matched.size();
  if (report.unmatched_items > 0) {
    report.warnings.push_back(std::to_string(report.unmatched_items) +
                              " items without metadata keep base fields only");
  }
  report.distinct_keywords = distinct_keyword_count(ds);
  ds.append_provenance("enriched(" + metadata_path.filename().string() + ", match " +
                       format_number(report.match_rate(ds.items.size())) + ")");
  if (report_out) *report_out = std::move(report);
  return ds;
}

Dataset induce_cold_start(Dataset ds, std::uint64_t seed, std::size_t min_keep,
                          std::optional<std::size_t> max_keep) {
  if (min_keep < 1) throw InvalidArgument("induce_cold_start: min_keep must be >= 1");
  if (max_keep && *max_keep < min_keep) {
    throw InvalidArgument("induce_cold_start: max_keep must be >= min_keep");
  }
  Rng rng(seed);
  std::vector<RatingEvent> kept;
  kept.reserve(ds.ratings.size());
  // Ratings are sorted by (user, timestamp, item): each user's block is
  // already chronological, so keeping a prefix keeps the earliest events.
  for (std::size_t begin = 0; begin < ds.ratings.size();) {
    std::size_t end = begin;
    while (end < ds.ratings.size() && ds.ratings[end].user == ds.ratings[begin].user) ++end;
    const std::size_t n = end - begin;
    std::size_t m = n;
    if (n >= min_keep) {
      const std::size_t hi = max_keep ? std::min(*max_keep, n) : n;
      m = static_cast<std::size_t>(rng.uniform_int(min_keep, hi));
    }
    kept.insert(kept.end(), ds.ratings.begin() + static_cast<std::ptrdiff_t>(begin),
                ds.ratings.begin() + static_cast<std::ptrdiff_t>(begin + m));
    begin = end;
  }
  ds.ratings = std::move(kept);
  ds.append_provenance("cold_start(seed=" + std::to_string(seed) + ", min=" +
                       std::to_string(min_keep) + ", max=" +
                       (max_keep ? std::to_string(*max_keep) : std::string("inf")) + ")");
  return ds;
}

Dataset filter_min_ratings(Dataset ds, std::size_t k, bool prune_items) {
  std::map<UserId, std::size_t> counts;
  for (const auto& r : ds.ratings) ++counts[r.user];
  std::erase_if(ds.ratings, [&](const RatingEvent& r) { return counts[r.user] < k; });
  std::erase_if(ds.users, [&](const auto& kv) {
    auto it = counts.find(kv.first);
    return (it == counts.end() ? 0 : it->second) < k;
  });
  if (prune_items) {
    std::set<ItemId> rated;
    for (const auto& r : ds.ratings) rated.insert(r.item);
    std::erase_if(ds.items, [&](const auto& kv) { return !rated.contains(kv.first); });
  }
  ds.append_provenance("min_ratings(" + std::to_string(k) + (prune_items ? ", pruned" : "") + ")");
  return ds;
}

std::size_t distinct_keyword_count(const Dataset& ds) {
  std::unordered_set<std::string> all;
  for (const auto& [id, item] : ds.items) all.insert(item.keywords.begin(), item.keywords.end());
  return all.size();
}

std::string write_canonical(const Dataset& ds) {
  std::ostringstream out;
  out << "metahybrid-dataset\t1\n";
  out << "provenance\t" << escape(ds.provenance) << '\n';
  for (const auto& [id, u] : ds.users) {
    out << "user\t" << id.value << '\t' << gender_code(u.gender) << '\t' << opt_num(u.age_band)
        << '\t' << opt_num(u.occupation) << '\t' << opt_text(u.location) << '\n';
  }
  for (const auto& [id, it] : ds.items) {
    out << "item\t" << id.value << '\t' << escape(it.title) << '\t' << opt_num(it.year) << '\t'
        << join_list(it.genres) << '\t' << join_list(it.keywords) << '\t' << join_list(it.cast)
        << '\t' << opt_num(it.runtime_minutes) << '\t' << opt_text(it.language) << '\t'
        << opt_num(it.budget) << '\t' << opt_num(it.profit) << '\t' << opt_num(it.vote_average)
        << '\t' << opt_text(it.plot) << '\n';
  }
  for (const auto& r : ds.ratings) {
    out << "rating\t" << r.user.value << '\t' << r.item.value << '\t' << format_number(r.rating)
        << '\t' << r.timestamp << '\n';
  }
  return out.str();
}

Dataset read_canonical(const std::string& text) {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "metahybrid-dataset\t1") {
    throw IngestError("canonical dataset: missing or unsupported header");
  }
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    auto bad = [&] { return IngestError("canonical:" + std::to_string(line_no) + ": malformed"); };
    if (f[0] == "provenance" && f.size() == 2) {
      ds.provenance = unescape(f[1]);
    } else if (f[0] == "user" && f.size() == 6) {
      UserRecord u;
      auto id = parse_int<std::int64_t>(f[1]);
      if (!id) throw bad();
      u.id = UserId(*id);
      u.gender = parse_gender(f[2]);
      u.age_band = read_opt_int<int>(f[3], line_no);
      u.occupation = read_opt_int<int>(f[4], line_no);
      u.location = read_opt_text(f[5]);
      ds.users.emplace(u.id, std::move(u));
    } else if (f[0] == "item" && f.size() == 13) {
      ItemRecord it;
      auto id = parse_int<std::int64_t>(f[1]);
      if (!id) throw bad();
      it.id = ItemId(*id);
      it.title = unescape(f[2]);
      it.year = read_opt_int<int>(f[3], line_no);
      it.genres = read_list(f[4]);
      it.keywords = read_list(f[5]);
      it.cast = read_list(f[6]);
      it.runtime_minutes = read_opt_int<int>(f[7], line_no);
      it.language = read_opt_text(f[8]);
      it.budget = read_opt_double(f[9], line_no);
      it.profit = read_opt_double(f[10], line_no);
      it.vote_average = read_opt_double(f[11], line_no);
      it.plot = read_opt_text(f[12]);
      ds.items.emplace(it.id, std::move(it));
    } else if (f[0] == "rating" && f.size() == 5) {
      auto u = parse_int<std::int64_t>(f[1]);
      auto i = parse_int<std::int64_t>(f[2]);
      auto r = parse_double(f[3]);
      auto ts = parse_int<std::int64_t>(f[4]);
      if (!u || !i || !r || !ts) throw bad();
      ds.ratings.push_back(RatingEvent{UserId(*u), ItemId(*i), *r, *ts});
    } else {
      throw bad();
    }
  }
  ds.normalize();
  ds.validate();
  return ds;
}

}  // namespace metahybrid
