#include "ctxcite/rng.hpp"

#include <cmath>
#include <numbers>

namespace ctxcite {

std::uint64_t CounterRng::Below(std::uint64_t bound) noexcept {
  if (bound <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x = Next();
  while (x >= limit) x = Next();
  return x % bound;
}

double CounterRng::Normal() noexcept {
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ctxcite
