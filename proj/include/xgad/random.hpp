#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace xgad {

// Seeded pseudo-random stream. Every source of randomness in the library
// takes one of these; named sub-streams are derived from a single seed so
// that a run is reproducible from that seed alone.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for `name`, derived from `seed`.
  static RandomStream derive(std::uint64_t seed, std::string_view name);

  RandomStream derive(std::string_view name);

  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  bool bernoulli(double p);
  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Uniformly random permutation of [0, n) via Fisher-Yates, drawing
  // uniform_int(0, i) for i = n-1 down to 1.
  std::vector<int> permutation(int n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::string_view name);

}  // namespace xgad
