#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace textscore {

// Seeded RNG used everywhere the library needs randomness. mt19937_64 is
// fully specified by the standard, and all derived draws below are computed
// from its raw output rather than std::*_distribution (whose results are
// implementation-defined), so identical seeds give identical streams on
// every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). n must be > 0; no modulo debiasing.
  std::uint64_t uniform_int(std::uint64_t n) { return gen_() % n; }

  double normal(double mean, double sd);

  // Unit-scale gamma variate, shape > 0 (Marsaglia-Tsang squeeze).
  double gamma(double shape);

  // Symmetric Dirichlet of dimension `dim` with concentration `alpha`.
  std::vector<double> dirichlet_symmetric(std::size_t dim, double alpha);

  // Fisher-Yates using uniform_int, so the permutation is seed-stable.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace textscore
