#pragma once

#include <cmath>
#include <cstdint>

namespace delayou {

// Counter-based stream: every variate is a pure function of
// (seed, stream, counter), so parallel Monte Carlo draws are identical
// for any scheduling of the paths.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix(seed ^ 0x9e3779b97f4a7c15ULL) ^ mix(stream + 0xbf58476d1ce4e5b9ULL)) {}

    double uniform() { return to_unit(next()); }

    // Box-Muller; consumes two counters per pair, caches the second draw.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = to_unit_open(next());
        double u2 = to_unit(next());
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t next() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30; z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27; z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }
    static double to_unit(std::uint64_t v) { return double(v >> 11) * 0x1.0p-53; }
    static double to_unit_open(std::uint64_t v) { return (double(v >> 11) + 0.5) * 0x1.0p-53; }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace delayou
