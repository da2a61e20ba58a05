#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace eod {

// Seeded generator with distributions implemented locally. The standard
// library distributions are implementation-defined, which would make seeded
// outputs differ between toolchains; the engine itself (mt19937_64) is fully
// specified by the standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  double normal(double mean = 0.0, double stddev = 1.0);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  // Text form of the full engine state; restore() accepts it back.
  std::string state() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

// Derives an independent sub-seed from a master seed and a stream name, so
// every consumer of randomness (split, session, folds) gets its own stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index = 0);

}  // namespace eod
