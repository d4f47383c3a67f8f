#include "tvreg/rng.hpp"

#include <cmath>

namespace tvreg {

uint64_t splitmix64_at(uint64_t seed, uint64_t counter) {
    uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

uint64_t derive_seed(uint64_t master, std::string_view domain, uint64_t index) {
    return splitmix64_at(master ^ fnv1a64(domain), index);
}

double SeedStream::next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double SeedStream::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

int SeedStream::next_rademacher() {
    return (next_u64() >> 63) ? 1 : -1;
}

} // namespace tvreg
