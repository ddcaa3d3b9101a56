#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace fluctsel {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Hashes a master seed and a list of integer keys into a stream key.
inline std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ull));
  return h;
}

/// Counter-based generator: output i is a bijective mix of (key, i), so any
/// stream can be positioned or regenerated independently.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0) : key_(key) {}
  CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
      : key_(stream_key(seed, keys)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    return splitmix64(key_ ^ splitmix64(++counter_));
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace fluctsel
