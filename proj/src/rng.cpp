#include "intentrl/rng.hpp"

#include <cmath>
#include <limits>

#include "intentrl/errors.hpp"

namespace intentrl {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SeededRng SeededRng::derive(std::uint64_t seed, std::uint64_t stream) {
  return SeededRng(splitmix64(seed ^ splitmix64(stream)));
}

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t SeededRng::below(std::uint64_t n) {
  if (n == 0) {
    throw DomainError("SeededRng::below: n must be positive");
  }
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - (max % n + 1) % n;  // largest accepted draw
  std::uint64_t draw = engine_();
  while (draw > limit) {
    draw = engine_();
  }
  return draw % n;
}

std::size_t SeededRng::categorical(std::span<const double> probs) {
  if (probs.empty()) {
    throw DimensionError("categorical: empty distribution");
  }
  const double u = uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) {
      return i;
    }
  }
  return probs.size() - 1;
}

Matrix glorot_uniform(std::size_t rows, std::size_t cols, SeededRng& rng) {
  Matrix m(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : m.values()) {
    v = rng.uniform(-limit, limit);
  }
  return m;
}

}  // namespace intentrl
