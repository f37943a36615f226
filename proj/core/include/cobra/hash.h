#ifndef COBRA_HASH_H_
#define COBRA_HASH_H_

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace cobra {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;

// 64-bit FNV-1a; chain calls through `h` to hash several fields.
inline std::uint64_t Fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string HexDigest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cobra

#endif  // COBRA_HASH_H_
