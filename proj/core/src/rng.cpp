#include "segcal/rng.hpp"

#include <cmath>
#include <numbers>

namespace segcal::rng {

double standard_normal(std::uint64_t key, std::uint64_t counter) noexcept {
  // Box-Muller, cosine branch only.
  const double u1 = 1.0 - to_unit(combine(key, 2 * counter));
  const double u2 = to_unit(combine(key, 2 * counter + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace segcal::rng
