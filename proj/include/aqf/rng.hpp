#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace aqf {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a parent seed and a stream index.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept
{
    return derive_seed(derive_seed(seed, a), b);
}

/// Seeded generator with portable helpers.
///
/// The engine's output sequence is fixed by the standard; the standard
/// distributions are not, so the bounded/real/normal draws are implemented
/// here to keep results identical across standard libraries.
class Rng
{
public:
    explicit Rng(std::uint64_t seed)
    : _engine(seed)
    {
    }

    std::uint64_t next_u64() { return _engine(); }

    /// Uniform integer in [0, bound), bound > 0 (rejection sampling, no modulo bias).
    std::uint64_t uniform_index(std::uint64_t bound)
    {
        const std::uint64_t limit = std::uint64_t(0) - (std::uint64_t(0) - bound) % bound;
        while (true) {
            std::uint64_t r = _engine();
            if (limit == 0 || r < limit) {
                return r % bound;
            }
        }
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return double(_engine() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Box-Muller standard normal.
    double normal(double mean = 0.0, double sd = 1.0)
    {
        if (_hasSpare) {
            _hasSpare = false;
            return mean + sd * _spare;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        _spare = r * std::sin(theta);
        _hasSpare = true;
        return mean + sd * r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::span<T> values)
    {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 _engine;
    double _spare = 0.0;
    bool _hasSpare = false;
};

}
