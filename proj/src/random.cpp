#include "xgad/random.hpp"

#include <numeric>

namespace xgad {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::string_view name) {
  // FNV-1a over the name, folded into the seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(seed) ^ h);
}

RandomStream RandomStream::derive(std::uint64_t seed, std::string_view name) {
  return RandomStream(mix_seed(seed, name));
}

RandomStream RandomStream::derive(std::string_view name) {
  return RandomStream(mix_seed(engine_(), name));
}

double RandomStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double RandomStream::normal(double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

bool RandomStream::bernoulli(double p) {
  return std::bernoulli_distribution(p)(engine_);
}

std::int64_t RandomStream::uniform_int(std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
}

std::vector<int> RandomStream::permutation(int n) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(uniform_int(0, i));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

}  // namespace xgad
