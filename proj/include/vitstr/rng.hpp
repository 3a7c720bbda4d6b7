#pragma once

#include <cmath>
#include <cstdint>

namespace vitstr {

// Deterministic splittable PRNG (splitmix64 core). Every run derives all of
// its randomness from one root seed; split(stream) yields an independent
// substream whose output does not depend on how much the parent has been
// consumed, so per-step / per-sample streams are stable under resumption.
class SplitRng {
public:
    explicit SplitRng(uint64_t seed) : key_(mix(seed ^ 0x9E3779B97F4A7C15ull)), state_(key_) {}

    // Derived from the stream identity only, never from consumption state.
    SplitRng split(uint64_t stream) const {
        return SplitRng(mix(key_ ^ mix(stream * 0xA0761D6478BD642Full + 0x8BB84B93962EACC9ull)));
    }

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // inclusive range
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(next_u64() % span);
    }

    // standard normal via Box-Muller, spare value cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - next_double();  // (0, 1]
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    uint64_t key_;
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace vitstr
