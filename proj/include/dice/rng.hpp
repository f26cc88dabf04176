#ifndef DICE_RNG_HPP_
#define DICE_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dice {

// Deterministic random stream. All transforms (uniform, normal, shuffle) are
// implemented by hand on top of std::mt19937_64 so that sequences are
// bit-identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  int uniform_int(int n) {
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  // Standard normal via Box-Muller. Two uniforms per draw, no cached spare,
  // so the stream position is a pure function of the number of calls.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// FNV-1a over bytes; used for stream derivation tags and content hashes.
std::uint64_t fnv1a(const void* data, std::size_t len);
std::uint64_t fnv1a(std::string_view s);

// Derive a child seed from (master, tag, index). Streams for different tags
// or indices are independent; adding agents never perturbs earlier streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index);

}  // namespace dice

#endif  // DICE_RNG_HPP_
