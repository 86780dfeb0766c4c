#include "metahybrid/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "metahybrid/rng.hpp"

namespace metahybrid {
namespace {

constexpr std::array<const char*, 18> kGenres{
    "Action",  "Adventure", "Animation", "Children's", "Comedy",  "Crime",
    "Documentary", "Drama", "Fantasy",   "Film-Noir",  "Horror",  "Musical",
    "Mystery", "Romance",   "Sci-Fi",    "Thriller",   "War",     "Western"};
constexpr std::size_t kGenreKeywords = 15;
constexpr std::size_t kCommonKeywords = 60;
constexpr std::int64_t kEpoch = 956700000;  // spring 2000

std::string genre_keyword(std::size_t g, std::size_t k) {
  std::string name = kGenres[g];
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) {
    return std::isalnum(c) ? static_cast<char>(std::tolower(c)) : '_';
  });
  return name + "_" + std::to_string(k);
}

double clamp_rating(double r) { return std::clamp(std::round(r), 1.0, 5.0); }

}  // namespace

Dataset make_planted_fixture(const FixtureOptions& o) {
  if (o.n_items < o.n_blockbusters + kGenres.size() || o.n_users < 10 ||
      o.min_ratings < 2 || o.max_ratings < o.min_ratings) {
    throw InvalidArgument("make_planted_fixture: inconsistent options");
  }
  Rng rng(o.seed);
  Dataset ds;
  ds.provenance = "planted fixture seed=" + std::to_string(o.seed);

  std::vector<std::size_t> primary(o.n_items);
  std::vector<double> quality(o.n_items);
  std::vector<std::vector<std::size_t>> genre_items(kGenres.size());
  for (std::size_t i = 0; i < o.n_items; ++i) {
    ItemRecord item;
    item.id = ItemId(static_cast<std::int64_t>(i + 1));
    item.title = "Title " + std::to_string(i + 1);
    item.year = 1960 + static_cast<int>(rng.index(40));
    primary[i] = i % kGenres.size();
    item.genres.emplace_back(kGenres[primary[i]]);
    if (rng.uniform() < 0.3) {
      const auto second = (primary[i] + 1 + rng.index(kGenres.size() - 1)) % kGenres.size();
      item.genres.emplace_back(kGenres[second]);
    }
    std::sort(item.genres.begin(), item.genres.end());
    std::set<std::string> kw;
    while (kw.size() < 4) kw.insert(genre_keyword(primary[i], rng.index(kGenreKeywords)));
    kw.insert("common_" + std::to_string(rng.index(kCommonKeywords)));
    item.keywords.assign(kw.begin(), kw.end());
    item.runtime_minutes = 80 + static_cast<int>(rng.index(100));
    item.language = "en";
    quality[i] = rng.normal(0.0, 0.5);
    if (i >= o.n_blockbusters) genre_items[primary[i]].push_back(i);
    ds.items.emplace(item.id, std::move(item));
  }

  constexpr std::array<int, 7> kAges{1, 18, 25, 35, 45, 50, 56};
  for (std::size_t u = 0; u < o.n_users; ++u) {
    UserRecord user;
    user.id = UserId(static_cast<std::int64_t>(u + 1));
    const bool loyalist = rng.uniform() < 0.5;
    user.gender = loyalist ? Gender::Female : Gender::Male;
    user.age_band = kAges[rng.index(kAges.size())];
    user.occupation = static_cast<int>(rng.index(21));
    std::string zip;
    for (int d = 0; d < 5; ++d) zip.push_back(static_cast<char>('0' + rng.index(10)));
    user.location = zip;

    const std::size_t n = o.min_ratings + rng.index(o.max_ratings - o.min_ratings + 1);
    std::vector<std::pair<std::size_t, double>> picks;
    std::set<std::size_t> taken;
    auto take_random = [&](auto accept, auto rating) {
      for (int tries = 0; tries < 1000; ++tries) {
        const std::size_t i = rng.index(o.n_items);
        if (taken.contains(i) || !accept(i)) continue;
        taken.insert(i);
        picks.emplace_back(i, rating(i));
        return;
      }
    };
    if (loyalist) {
      const std::size_t favourite = rng.index(kGenres.size());
      auto pool = genre_items[favourite];
      rng.shuffle(pool);
      const std::size_t n_fav = std::min(pool.size(), (n * 85 + 99) / 100);
      for (std::size_t k = 0; k < n_fav; ++k) {
        taken.insert(pool[k]);
        picks.emplace_back(pool[k], rng.uniform() < 0.5 ? 5.0 : 4.0);
      }
      while (picks.size() < n) {
        take_random([&](std::size_t i) { return primary[i] != favourite; },
                    [&](std::size_t) { return rng.uniform() < 0.5 ? 2.0 : 1.0; });
      }
    } else {
      const std::size_t n_pop = std::min(o.n_blockbusters, (n * 75 + 99) / 100);
      std::vector<std::size_t> pool(o.n_blockbusters);
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      rng.shuffle(pool);
      for (std::size_t k = 0; k < n_pop; ++k) {
        taken.insert(pool[k]);
        picks.emplace_back(pool[k], clamp_rating(4.3 + quality[pool[k]] + rng.normal(0.0, 0.5)));
      }
      while (picks.size() < n) {
        take_random([&](std::size_t i) { return i >= o.n_blockbusters; },
                    [&](std::size_t) { return rng.uniform() < 0.5 ? 3.0 : 2.0; });
      }
    }

    // Sessions at a habitual hour, spread over a few months.
    rng.shuffle(picks);
    const std::int64_t hour = static_cast<std::int64_t>(rng.index(24));
    std::int64_t day = static_cast<std::int64_t>(rng.index(60));
    for (const auto& [i, rating] : picks) {
      day += static_cast<std::int64_t>(rng.index(3));
      const std::int64_t ts =
          kEpoch + day * 86400 + hour * 3600 + static_cast<std::int64_t>(rng.index(3600));
      ds.ratings.push_back({user.id, ItemId(static_cast<std::int64_t>(i + 1)), rating, ts});
    }
    ds.users.emplace(user.id, std::move(user));
  }
  ds.normalize();
  ds.validate();
  return ds;
}

void write_movielens_files(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IngestError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("ratings.dat");
    for (const auto& r : ds.ratings) {
      out << r.user.value << "::" << r.item.value << "::" << static_cast<int>(r.rating) << "::"
          << r.timestamp << '\n';
    }
  }
  {
    auto out = open("users.dat");
    for (const auto& [id, u] : ds.users) {
      const char* g = u.gender == Gender::Male ? "M" : u.gender == Gender::Female ? "F" : "";
      out << id.value << "::" << g << "::" << (u.age_band ? std::to_string(*u.age_band) : "")
          << "::" << (u.occupation ? std::to_string(*u.occupation) : "") << "::"
          << u.location.value_or("") << '\n';
    }
  }
  {
    auto out = open("movies.dat");
    for (const auto& [id, it] : ds.items) {
      out << id.value << "::" << it.title;
      if (it.year) out << " (" << *it.year << ")";
      out << "::";
      for (std::size_t k = 0; k < it.genres.size(); ++k) out << (k ? "|" : "") << it.genres[k];
      out << '\n';
    }
  }
  {
    auto out = open("metadata.tsv");
    out << "item_id\ttitle\tyear\tkeywords\truntime\tcast\tlanguage\tbudget\tprofit\tplot\n";
    for (const auto& [id, it] : ds.items) {
      out << id.value << '\t' << it.title << '\t' << (it.year ? std::to_string(*it.year) : "")
          << '\t';
      for (std::size_t k = 0; k < it.keywords.size(); ++k) out << (k ? "|" : "") << it.keywords[k];
      out << '\t' << (it.runtime_minutes ? std::to_string(*it.runtime_minutes) : "") << "\t\t"
          << it.language.value_or("") << "\t\t\t\n";
    }
  }
}

std::vector<RatingEvent> make_low_rank_ratings(const LowRankOptions& o) {
  if (o.rank == 0 || !(o.observed > 0.0 && o.observed <= 1.0)) {
    throw InvalidArgument("make_low_rank_ratings: inconsistent options");
  }
  Rng rng(o.seed);
  // Factor entries ~ N(0, s) with s chosen so u . v has standard deviation ~1.
  const double s = std::pow(1.0 / static_cast<double>(o.rank), 0.25);
  std::vector<double> U(o.n_users * o.rank), V(o.n_items * o.rank);
  for (auto& x : U) x = rng.normal(0.0, s);
  for (auto& x : V) x = rng.normal(0.0, s);
  std::vector<RatingEvent> out;
  std::int64_t ts = 0;
  for (std::size_t u = 0; u < o.n_users; ++u) {
    for (std::size_t i = 0; i < o.n_items; ++i) {
      if (rng.uniform() >= o.observed) continue;
      double r = 3.0;
      for (std::size_t k = 0; k < o.rank; ++k) r += U[u * o.rank + k] * V[i * o.rank + k];
      r += rng.normal(0.0, o.noise);
      out.push_back({UserId(static_cast<std::int64_t>(u + 1)),
                     ItemId(static_cast<std::int64_t>(i + 1)), r, ++ts});
    }
  }
  return out;
}

}  // namespace metahybrid
