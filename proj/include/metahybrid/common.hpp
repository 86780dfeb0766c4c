#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace metahybrid {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input files that cannot be read or parsed.
class IngestError : public Error {
 public:
  using Error::Error;
};

/// Bad arguments or violated preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Opaque integer identifier. Tag keeps user and item ids from mixing.
template <typename Tag>
struct Id {
  std::int64_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::int64_t v) : value(v) {}
  friend constexpr auto operator<=>(Id, Id) = default;
};

struct UserTag {};
struct ItemTag {};
using UserId = Id<UserTag>;
using ItemId = Id<ItemTag>;

/// One explicit-feedback event. Ingested ratings are integers 1..5; the
/// recommenders accept any real value on that scale.
struct RatingEvent {
  UserId user;
  ItemId item;
  double rating = 0.0;
  std::int64_t timestamp = 0;

  friend bool operator==(const RatingEvent&, const RatingEvent&) = default;
};

inline constexpr double kMinRating = 1.0;
inline constexpr double kMaxRating = 5.0;
inline constexpr double kScaleMidpoint = 3.0;

}  // namespace metahybrid

template <typename Tag>
struct std::hash<metahybrid::Id<Tag>> {
  std::size_t operator()(metahybrid::Id<Tag> id) const noexcept {
    return std::hash<std::int64_t>{}(id.value);
  }
};
