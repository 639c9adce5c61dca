#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace uflip {

inline constexpr std::uint64_t kSector = 512;
inline constexpr std::uint64_t KiB = 1024;
inline constexpr std::uint64_t MiB = 1024 * KiB;
inline constexpr std::uint64_t GiB = 1024 * MiB;

// Bumped whenever a persisted artifact (profile, plan, snapshot, results)
// changes shape.
inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

enum class ErrorKind {
  Spec,         // invalid specification or configuration
  Schedule,     // pattern produced an out-of-range address
  Io,           // device IO failure
  Unsupported,  // backend cannot perform the operation
  Version,      // artifact/schema/profile mismatch
  Analysis,     // not enough data to compute a quantity
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::Spec, what);
}

enum class Mode { Read, Write };

inline const char* to_string(Mode m) { return m == Mode::Read ? "R" : "W"; }

// splitmix64 finalizer; all seeded randomness in the project is derived
// through this so results do not depend on the standard library's
// distribution implementations.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// Counter-based uniform draw in [0, n). Rejection sampling keeps it unbiased.
inline std::uint64_t uniform_below(std::uint64_t seed, std::uint64_t counter,
                                   std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t state = derive_seed(seed, counter);
  for (;;) {
    std::uint64_t v = mix64(state);
    if (v < limit) return v % n;
    state = v;
  }
}

// Uniform double in [0, 1).
inline double uniform_unit(std::uint64_t seed, std::uint64_t counter) {
  return static_cast<double>(derive_seed(seed, counter) >> 11) * 0x1.0p-53;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace uflip
