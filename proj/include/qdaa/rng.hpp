#ifndef QDAA_RNG_HPP
#define QDAA_RNG_HPP

#include <cstdint>
#include <vector>

namespace qdaa {

/// Deterministic splitmix64 stream. Cheap to construct, no global state;
/// two streams built from the same key produce identical sequences
/// regardless of thread scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53 mantissa bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  std::uint64_t state_;
};

/// Collapses a structured key (seed, rectangle index, facet, tile, phase)
/// into the state of one RngStream.
class StreamKey {
 public:
  explicit StreamKey(std::uint64_t seed) : h_(seed ^ 0x6a09e667f3bcc909ull) { mix(0x243f6a8885a308d3ull); }

  StreamKey& add(std::uint64_t word) {
    mix(word);
    return *this;
  }

  StreamKey& add_ints(const std::vector<int>& values) {
    mix(0x452821e638d01377ull + values.size());
    for (int v : values) mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
    return *this;
  }

  RngStream stream() const { return RngStream(h_); }

 private:
  void mix(std::uint64_t w) {
    h_ ^= w + 0x9e3779b97f4a7c15ull + (h_ << 6) + (h_ >> 2);
    RngStream s(h_);
    h_ = s.next_u64();
  }

  std::uint64_t h_;
};

}  // namespace qdaa

#endif  // QDAA_RNG_HPP
