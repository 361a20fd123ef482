#include "flowsplat/noise.hpp"

#include <cmath>

namespace flowsplat::noise {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ a);
  h = splitmix(h ^ (b * 0xd6e8feb86659fd93ULL));
  h = splitmix(h ^ (c * 0xa0761d6478bd642fULL));
  return h;
}

double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return (static_cast<double>(hash(seed, a, b, c) >> 11) + 0.5) * 0x1.0p-53;
}

double normal(std::uint64_t seed, std::uint64_t gaussian, std::uint64_t step,
              std::uint64_t component) {
  const double u1 = uniform(seed, gaussian, step, 2 * component);
  const double u2 = uniform(seed, gaussian, step, 2 * component + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace flowsplat::noise
