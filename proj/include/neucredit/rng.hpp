#pragma once

#include <cstdint>
#include <vector>

#include "neucredit/matrix.hpp"

namespace neucredit {

/// Seeded pseudo-random generator: xoshiro256** with its state expanded from the
/// 64-bit seed by splitmix64. Integer and uniform draws use only integer
/// arithmetic plus correctly-rounded IEEE operations, so a seed yields the same
/// sequence on every platform. normal() additionally goes through libm log/cos.
///
///   uniform01(): top 53 bits of next() scaled by 2^-53, in [0, 1)
///   normal():    Box-Muller, one fresh pair of uniforms per draw (no caching)
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next();
  double uniform01();
  double uniform(double lo, double hi);
  double normal();
  /// Uniform integer in [0, n), n > 0, by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n);

  Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi);

  /// Fisher-Yates shuffle driven by below().
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Independent stream derived from this generator's seed and a tag.
  Rng fork(std::uint64_t tag) const;

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

}  // namespace neucredit
