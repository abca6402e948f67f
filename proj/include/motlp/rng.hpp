#pragma once

#include <cmath>
#include <cstdint>

namespace motlp {

// Counter-based pseudorandom stream: value i of stream `seed` is
// splitmix64(seed ^ golden*i) finalized.  Stateless per index, so runs are
// reproducible across platforms and draws can be replayed from (seed, counter)
// alone.  Algorithm identifier for provenance records: "splitmix64-counter-v1".
inline constexpr const char* kRngAlgorithmId = "splitmix64-counter-v1";

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed = 0) : seed_(seed), counter_(0) {}

    std::uint64_t next_u64() {
        return splitmix64(seed_ ^ (0x9e3779b97f4a7c15ULL * ++counter_));
    }

    // Uniform double in [0, 1) with 53 random mantissa bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform double in [a, b).
    double next_uniform(double a, double b) { return a + (b - a) * next_uniform(); }

    // Standard normal via Box-Muller; consumes two uniforms per pair.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        // Guard against log(0).
        if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace motlp
