#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace cfi {

// FNV-1a 64-bit, used for file checksums and provenance hashes.
class Fnv1a64 {
 public:
  Fnv1a64& update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 1099511628211ull;
    }
    return *this;
  }
  Fnv1a64& update_u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    return update(b, 8);
  }
  Fnv1a64& update_f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    return update_u64(bits);
  }
  Fnv1a64& update_str(std::string_view s) { return update(s.data(), s.size()); }

  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 14695981039346656037ull;
};

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  return Fnv1a64().update(data, n).digest();
}

inline std::uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(s.data(), s.size());
}

}  // namespace cfi
