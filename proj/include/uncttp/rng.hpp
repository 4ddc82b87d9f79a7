#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "uncttp/text.hpp"

namespace uncttp {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based uniform draw in [0, 1): a pure function of its arguments,
/// so concurrent callers observe the same value regardless of scheduling.
inline double counter_uniform(std::uint64_t seed, std::string_view id, std::uint64_t index,
                              std::uint64_t stream) noexcept {
    std::uint64_t h = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
    h = splitmix64(h ^ text::fnv1a(id));
    h = splitmix64(h ^ index);
    h = splitmix64(h ^ (stream * 0xd1342543de82ef95ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Seeded engine with distribution code written out explicitly; the
/// standard distributions are implementation-defined and would make
/// golden outputs toolchain-dependent.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Independent stream for one (seed, instance id) pair.
    static Rng for_instance(std::uint64_t seed, std::string_view id) {
        return Rng(splitmix64(seed) ^ text::fnv1a(id));
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n), rejection-sampled. n must be > 0.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace uncttp
