#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace qcl {

// Splittable counter-based generator (SplitMix64 core). One master seed
// drives the whole library; independent substreams are derived by label so
// that adding a consumer never perturbs the draws seen by another.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal, Box-Muller (no cached spare, keeps the stream splittable)
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

  // independent substream derived from a label
  RandomStream fork(std::string_view label) const {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (char c : label) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 0x100000001b3ull;
    }
    RandomStream child(state_ ^ h);
    child.next_u64();
    return child;
  }

  RandomStream fork(std::string_view label, std::uint64_t index) const {
    RandomStream child = fork(label);
    child.state_ ^= 0x9e3779b97f4a7c15ull * (index + 1);
    child.next_u64();
    return child;
  }

 private:
  std::uint64_t state_;
};

}  // namespace qcl
