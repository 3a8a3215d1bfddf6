#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "intentrl/numkit.hpp"

namespace intentrl {

// Seeded pseudo-random source. The engine is MT19937-64 (std::mt19937_64, whose
// output sequence is fixed by the C++ standard). Derived quantities use only the
// raw 64-bit draws so that ports in other languages reproduce them exactly:
//
//   uniform()     = (draw >> 11) * 2^-53                      in [0, 1)
//   below(n)      = draw % n, rejecting draws >= 2^64 - (2^64 % n)
//   bernoulli(p)  = uniform() < p
//   categorical   = first i with uniform() < cumulative(p_0..p_i), else last index
//   shuffle       = Fisher-Yates from the back, swap i with below(i + 1)
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  // Independent stream for worker `stream`, derived with SplitMix64.
  static SeededRng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi);
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t categorical(std::span<const double> probs);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Glorot-uniform fill in column-major element order.
Matrix glorot_uniform(std::size_t rows, std::size_t cols, SeededRng& rng);

}  // namespace intentrl
