#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace phyjump {

/// Counter-keyed pseudo-random generator (splitmix64).
///
/// Every consumer derives its own stream from (seed, stream tag, counters)
/// via `keyed`, so concurrent code draws from independent streams whose
/// content does not depend on scheduling. Streams are cheap to construct
/// (one word of state), which matters because the particle filter makes one
/// per (step, particle).
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    /// Derive a stream from a seed and up to three key words.
    static SplitMix64 keyed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                            std::uint64_t c = 0) {
        std::uint64_t s = mix(seed + 0x9E3779B97F4A7C15ULL);
        s = mix(s ^ (a + 0xD1B54A32D192ED03ULL));
        s = mix(s ^ (b + 0x8CB92BA72F3D8DD7ULL));
        s = mix(s ^ (c + 0xEB44ACCAB455D165ULL));
        return SplitMix64(s);
    }

    std::uint64_t operator()() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return std::numeric_limits<std::uint64_t>::max(); }

private:
    std::uint64_t state_;
};

/// Stream tags; keep globally unique so derived streams never collide.
namespace streams {
inline constexpr std::uint64_t seat = 0x01;
inline constexpr std::uint64_t resample = 0x02;
inline constexpr std::uint64_t propose = 0x03;
inline constexpr std::uint64_t rate = 0x04;
inline constexpr std::uint64_t accept = 0x05;
inline constexpr std::uint64_t init = 0x06;
inline constexpr std::uint64_t tree = 0x07;
inline constexpr std::uint64_t data = 0x08;
inline constexpr std::uint64_t chain = 0x09;
inline constexpr std::uint64_t smc = 0x0A;
inline constexpr std::uint64_t generate = 0x0B;
}  // namespace streams

// Samplers are hand-rolled on purpose: std::* distributions are
// implementation-defined, and reproducibility of chains and frozen test
// values requires draws to be a pure function of the keyed stream.

/// Uniform on [0, 1).
inline double uniform01(SplitMix64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0, 1]; safe to feed into log().
inline double uniform_pos(SplitMix64& rng) {
    return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_below(SplitMix64& rng, std::uint64_t n) {
    // Multiply-shift rejection-free bound; bias < 2^-64, irrelevant here.
    return static_cast<std::uint64_t>((static_cast<__uint128_t>(rng()) * n) >> 64);
}

inline double sample_exponential(SplitMix64& rng, double rate) {
    return -std::log(uniform_pos(rng)) / rate;
}

inline double sample_normal(SplitMix64& rng) {
    const double u = uniform_pos(rng);
    const double v = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
}

inline int sample_poisson(SplitMix64& rng, double mean) {
    if (mean <= 0.0) {
        return 0;
    }
    if (mean > 60.0) {
        // Split by infinite divisibility; keeps the inversion loop short
        // and free of underflow.
        const int a = sample_poisson(rng, mean / 2);
        return a + sample_poisson(rng, mean / 2);
    }
    double p = std::exp(-mean);
    double cdf = p;
    const double u = uniform01(rng);
    int k = 0;
    while (u > cdf && k < 4096) {
        ++k;
        p *= mean / k;
        cdf += p;
    }
    return k;
}

/// Gamma(shape, rate) by Marsaglia-Tsang; shape < 1 handled by boosting.
inline double sample_gamma(SplitMix64& rng, double shape, double rate) {
    if (shape < 1.0) {
        const double u = uniform_pos(rng);
        return sample_gamma(rng, shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = sample_normal(rng);
        double v = 1.0 + c * x;
        if (v <= 0.0) {
            continue;
        }
        v = v * v * v;
        const double u = uniform_pos(rng);
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return d * v / rate;
        }
    }
}

/// Index draw proportional to nonnegative weights (linear scan).
inline std::size_t sample_discrete(SplitMix64& rng, std::span<const double> weights,
                                   double total) {
    double u = uniform01(rng) * total;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) {
            continue;
        }
        last = i;
        u -= weights[i];
        if (u < 0.0) {
            return i;
        }
    }
    return last;  // rounding spill lands on the last positive weight
}

inline std::size_t sample_discrete(SplitMix64& rng, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    return sample_discrete(rng, weights, total);
}

}  // namespace phyjump
