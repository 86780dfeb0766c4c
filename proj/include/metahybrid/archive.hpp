#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "metahybrid/common.hpp"

namespace metahybrid {

/// Little-endian binary writer for persisted models. Every archive starts
/// with a four-byte magic tag and a format version.
class ArchiveWriter {
 public:
  ArchiveWriter(std::string_view magic, std::uint32_t version);

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.append(p, sizeof(T));
  }

  void put_string(std::string_view s);

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_vector(std::span<const T> v) {
    put<std::uint64_t>(v.size());
    const auto* p = reinterpret_cast<const char*>(v.data());
    bytes_.append(p, v.size() * sizeof(T));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_vector(const std::vector<T>& v) {
    put_vector(std::span<const T>(v));
  }

  const std::string& bytes() const { return bytes_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::string bytes_;
};

class ArchiveReader {
 public:
  ArchiveReader(std::string bytes, std::string_view magic, std::uint32_t version);
  static ArchiveReader open(const std::filesystem::path& path, std::string_view magic,
                            std::uint32_t version);

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    require(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string();
  /// Reads a string without consuming it.
  std::string peek_string();

  template <typename T>
    requires std::is_arithmetic_v<T>
  std::vector<T> get_vector() {
    const auto n = get<std::uint64_t>();
    if (n > (bytes_.size() - pos_) / sizeof(T)) throw IngestError("archive: truncated vector");
    std::vector<T> v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
    return v;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void require(std::size_t n) const;

  std::string bytes_;
  std::size_t pos_ = 0;
};

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Hex SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace metahybrid
