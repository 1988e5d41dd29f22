#pragma once

// Counter-based random numbers. A stream is identified by (seed, replica,
// stream); the k-th draw is a pure function of that key and k, so replicas
// are reproducible no matter which worker runs them.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace coagtree {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class CounterRng {
public:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  CounterRng(std::uint64_t seed, std::uint64_t replica, std::uint64_t stream) noexcept
      : key_(mix64(mix64(mix64(seed) ^ (replica + kGolden)) ^ (stream * kGolden + 1))) {}

  std::uint64_t next() noexcept { return mix64(key_ + (++counter_) * kGolden); }

  /// The draw at an arbitrary counter value, without advancing.
  std::uint64_t at(std::uint64_t counter) const noexcept { return mix64(key_ + (counter + 1) * kGolden); }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Exponential with rate 1.
  double exponential() noexcept { return -std::log1p(-uniform()); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} - n + 1) % n;
    for (;;) {
      const std::uint64_t x = next();
      const auto wide = static_cast<unsigned __int128>(x) * n;
      if (static_cast<std::uint64_t>(wide) >= limit) return static_cast<std::uint64_t>(wide >> 64);
    }
  }

  std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace coagtree
