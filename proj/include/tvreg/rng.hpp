#ifndef TVREG_RNG_HPP
#define TVREG_RNG_HPP

#include <cstdint>
#include <string_view>

namespace tvreg {

// Counter-based generator built on splitmix64 (Steele, Lea, Flood 2014).
// The output function is fixed and documented so that any implementation
// can reproduce a stream exactly:
//
//   out(seed, c) = mix(seed + (c + 1) * 0x9E3779B97F4A7C15)
//   mix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//           z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31;
//
// Derived draws:
//   uniform (0,1]: ((out >> 11) + 1) * 2^-53
//   gaussian: Box-Muller pair from two consecutive uniforms,
//             z1 = sqrt(-2 ln u1) cos(2 pi u2), z2 = ... sin(2 pi u2)
//   rademacher: +1 if the top bit of out is set, else -1
uint64_t splitmix64_at(uint64_t seed, uint64_t counter);

// Stable sub-stream seed: out(master ^ fnv1a64(domain), index).
uint64_t fnv1a64(std::string_view s);
uint64_t derive_seed(uint64_t master, std::string_view domain, uint64_t index);

class SeedStream {
  public:
    explicit SeedStream(uint64_t seed) : seed_(seed) {}

    uint64_t next_u64() { return splitmix64_at(seed_, counter_++); }
    double next_uniform();   // (0,1]
    double next_gaussian();  // N(0,1), Box-Muller with cached spare
    int next_rademacher();   // +1 or -1

    uint64_t seed() const { return seed_; }
    uint64_t counter() const { return counter_; }

  private:
    uint64_t seed_;
    uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace tvreg

#endif
