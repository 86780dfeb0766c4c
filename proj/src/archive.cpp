#include "metahybrid/archive.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

namespace metahybrid {

ArchiveWriter::ArchiveWriter(std::string_view magic, std::uint32_t version) {
  if (magic.size() != 4) throw InvalidArgument("archive magic must be 4 bytes");
  bytes_.append(magic);
  put(version);
}

void ArchiveWriter::put_string(std::string_view s) {
  put<std::uint64_t>(s.size());
  bytes_.append(s);
}

void ArchiveWriter::save(const std::filesystem::path& path) const { write_file(path, bytes_); }

ArchiveReader::ArchiveReader(std::string bytes, std::string_view magic, std::uint32_t version)
    : bytes_(std::move(bytes)) {
  require(4);
  if (std::string_view(bytes_.data(), 4) != magic) {
    throw IngestError("archive: expected magic '" + std::string(magic) + "'");
  }
  pos_ = 4;
  const auto found = get<std::uint32_t>();
  if (found != version) {
    throw IngestError("archive '" + std::string(magic) + "': unsupported version " +
                      std::to_string(found));
  }
}

ArchiveReader ArchiveReader::open(const std::filesystem::path& path, std::string_view magic,
                                  std::uint32_t version) {
  return ArchiveReader(read_file(path), magic, version);
}

std::string ArchiveReader::get_string() {
  const auto n = get<std::uint64_t>();
  require(n);
  std::string s(bytes_.data() + pos_, n);
  pos_ += n;
  return s;
}

std::string ArchiveReader::peek_string() {
  const auto saved = pos_;
  auto s = get_string();
  pos_ = saved;
  return s;
}

void ArchiveReader::require(std::size_t n) const {
  if (bytes_.size() - pos_ < n) throw IngestError("archive: unexpected end of data");
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace metahybrid
