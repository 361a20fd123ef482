#pragma once

#include <cstdint>

namespace flowsplat::noise {

// Stateless 64-bit mix of (seed, a, b, c); equal keys give equal outputs.
std::uint64_t hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

// Uniform in (0, 1), never exactly 0 or 1.
double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

// Standard normal via Box-Muller on two counter-derived uniforms.
double normal(std::uint64_t seed, std::uint64_t gaussian, std::uint64_t step,
              std::uint64_t component);

}  // namespace flowsplat::noise
