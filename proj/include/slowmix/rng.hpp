#pragma once

#include <cstdint>

namespace slowmix {

// Counter-based generator: every draw is a pure function of (key, counter),
// so streams are reproducible bit-for-bit regardless of evaluation order.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash2(std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return hash2(hash2(a, b), c);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double u01(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Stateful stream on top of the counter hash; portable across platforms.
struct CounterRng {
    std::uint64_t key;
    std::uint64_t n = 0;

    explicit CounterRng(std::uint64_t key_) : key(key_) {}

    std::uint64_t next_u64() { return hash2(key, n++); }
    double next_u01() { return u01(next_u64()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_u01(); }
    // Index in [0, m)
    std::uint64_t next_below(std::uint64_t m) { return next_u64() % m; }
};

} // namespace slowmix
