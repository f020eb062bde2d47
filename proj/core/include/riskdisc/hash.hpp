#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace riskdisc {

/// 64-bit FNV-1a over the raw bytes.
constexpr std::uint64_t fnv1a_64(std::string_view bytes) noexcept {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

/// Incremental SHA-256 for hashing several inputs into one digest.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view bytes);
  /// Finishes the digest; the object must not be updated afterwards.
  std::string hex_digest();

 private:
  void* ctx_;
};

}  // namespace riskdisc
