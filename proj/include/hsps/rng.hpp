#pragma once

// Seedable, splittable random streams for the simulator.
//
// Every stream is an std::mt19937_64 keyed by (seed, stream, purpose) through
// splitmix64, so independent trajectories never share state and a trajectory
// draws the same numbers regardless of which thread runs it. The variates are
// computed here rather than with <random> distributions, whose algorithms are
// implementation-defined, to keep results identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace hsps {

inline std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng
{
public:
    Rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t purpose = 0)
    {
        std::uint64_t state = seed;
        std::uint64_t key = splitmix64(state);
        state = key ^ (stream * 0xd1b54a32d192ed03ULL);
        key = splitmix64(state);
        state = key ^ (purpose * 0x8cb92ba72f3d8dd7ULL);
        std::uint32_t words[8];
        for (int i = 0; i < 4; ++i) {
            const std::uint64_t w = splitmix64(state);
            words[2 * i] = static_cast<std::uint32_t>(w);
            words[2 * i + 1] = static_cast<std::uint32_t>(w >> 32);
        }
        std::seed_seq seq(std::begin(words), std::end(words));
        engine_.seed(seq);
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Exponential waiting time with the given rate (> 0).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Failures before the first success, success probability p in (0, 1].
    std::uint64_t geometric(double p)
    {
        if (p >= 1) return 0;
        const double u = 1 - uniform();  // (0, 1]
        const double k = std::floor(std::log(u) / std::log1p(-p));
        if (k >= static_cast<double>(std::numeric_limits<std::uint64_t>::max() / 2)) {
            return std::numeric_limits<std::uint64_t>::max() / 2;
        }
        return static_cast<std::uint64_t>(k);
    }

    /// Standard normal variate (Box-Muller, one value per call).
    double normal()
    {
        const double u1 = 1 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace hsps
