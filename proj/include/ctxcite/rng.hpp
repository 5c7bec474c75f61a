#pragma once

#include <cstdint>
#include <string_view>

namespace ctxcite {

// SplitMix64 finalizer. Every random quantity in the library is derived from
// Mix64(key + counter * kGolden), so streams are portable, need no state to
// split, and can be evaluated in any order.
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t Mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

// Derives an independent stream key from a user seed and a stream label.
constexpr std::uint64_t StreamKey(std::uint64_t seed,
                                  std::string_view label) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return Mix64(seed ^ Mix64(h));
}

class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}
  CounterRng(std::uint64_t seed, std::string_view label) noexcept
      : key_(StreamKey(seed, label)) {}

  constexpr std::uint64_t At(std::uint64_t counter) const noexcept {
    return Mix64(key_ + (counter + 1) * kGolden);
  }

  std::uint64_t Next() noexcept { return At(counter_++); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() noexcept {
    return static_cast<double>(Next() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * Uniform();
  }

  // Uniform integer in [0, bound). Uses rejection to stay unbiased.
  std::uint64_t Below(std::uint64_t bound) noexcept;

  // Standard normal via Box-Muller.
  double Normal() noexcept;

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ctxcite
