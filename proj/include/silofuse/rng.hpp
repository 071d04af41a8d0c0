#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "silofuse/matrix.hpp"

namespace silofuse {

// Deterministic seed derivation: every module draws its seed from the master
// seed via derive_seed(master, stream-name, index). FNV-1a over the stream
// name mixed with the master and index, finished with splitmix64.
uint64_t derive_seed(uint64_t master, std::string_view stream, uint64_t index = 0);

/// Seeded random stream. Distributions are hand-rolled (canonical uniform,
/// Box-Muller normals, rejection-sampled bounded ints, Fisher-Yates shuffle)
/// so that a given seed replays the same values on any platform, which the
/// std:: distribution objects do not guarantee.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [lo, hi] inclusive, unbiased.
  int64_t uniform_int(int64_t lo, int64_t hi);

  // Standard normal via Box-Muller (pairs cached).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  void fill_normal(Matrix& m);
  Matrix normal_matrix(int64_t rows, int64_t cols);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(uniform_int(0, i))]);
    }
  }

  std::vector<int64_t> permutation(int64_t n);
  // k indices drawn without replacement from [0, n).
  std::vector<int64_t> sample_without_replacement(int64_t n, int64_t k);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace silofuse
