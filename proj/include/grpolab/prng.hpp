#ifndef GRPOLAB_PRNG_HPP_
#define GRPOLAB_PRNG_HPP_

#include <cstdint>

namespace grpolab {

// splitmix64 finalizer (Steele et al., "Fast splittable pseudorandom number
// generators"). Full-avalanche 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent sub-streams of one run. Keeping the channel's xi draws in their
// own domain means the same responses see the same corruption coin flips no
// matter what else consumed randomness.
enum class StreamDomain : std::uint64_t {
  xi = 1,        // corruption channel uniforms
  response = 2,  // group response sampling
  shuffle = 3,   // holdout balancing / estimation sets
  instance = 4,  // randomized verification instances
};

// Address of a single uniform draw. Every draw is a pure function of the key,
// so experiments are bit-reproducible and order-independent: re-running any
// (prompt, iteration, slot) slice reproduces exactly the same randomness.
struct StreamKey {
  std::uint64_t seed = 0;
  StreamDomain domain = StreamDomain::xi;
  std::uint64_t prompt = 0;
  std::uint64_t iteration = 0;
  std::uint64_t slot = 0;
};

constexpr std::uint64_t key_bits(const StreamKey& key) {
  std::uint64_t h = mix64(key.seed);
  h = mix64(h ^ static_cast<std::uint64_t>(key.domain));
  h = mix64(h ^ key.prompt);
  h = mix64(h ^ key.iteration);
  return mix64(h ^ key.slot);
}

// Uniform in [0, 1) with 53 random bits.
constexpr double to_unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

constexpr double key_uniform(const StreamKey& key) {
  return to_unit_interval(key_bits(key));
}

// Sequential splitmix64 stream for draws without a natural counter structure
// (shuffles, random test instances). Never used on the reward path.
class SequentialRng {
 public:
  explicit SequentialRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return to_unit_interval(next_u64()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive. Rejection sampling keeps the
  // distribution exact.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range);
    std::uint64_t draw = next_u64();
    while (draw >= limit) draw = next_u64();
    return lo + static_cast<std::int64_t>(draw % range);
  }

 private:
  std::uint64_t state_;
};

}  // namespace grpolab

#endif  // GRPOLAB_PRNG_HPP_
