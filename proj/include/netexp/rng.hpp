#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace netexp {

/// SplitMix64 generator. All randomness in the project flows through this
/// engine so that every result is reproducible bit-for-bit from a seed,
/// independent of platform and thread count. Standard-library distributions
/// are avoided on purpose: their output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    /// Independent substream keyed by (seed, index). Replicate r of a Monte
    /// Carlo run draws from substream(master_seed, r), which makes the run
    /// deterministic no matter how replicates are scheduled across threads.
    static Rng substream(std::uint64_t seed, std::uint64_t index) {
        Rng r(0);
        r.state_ = mix(mix(seed) ^ mix(index * 0x9e3779b97f4a7c15ull + 0xbf58476d1ce4e5b9ull));
        return r;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    /// Uniform double in [0,1) with 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unbiased uniform integer in [0, bound), bound >= 1. Rejection sampling.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Rng::next_below: bound must be positive");
        const std::uint64_t umax = ~0ull;
        const std::uint64_t rem = (umax % bound + 1) % bound;  // 2^64 mod bound
        const std::uint64_t limit = umax - rem;                // inclusive acceptance upper bound
        for (;;) {
            std::uint64_t x = next_u64();
            if (x <= limit) return x % bound;
        }
    }

    bool next_bernoulli(double p) { return next_unit() < p; }

    /// Standard normal via Box-Muller.
    double next_normal() {
        // u1 in (0,1] so the log is finite
        double u1 = 1.0 - next_unit();
        double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

/// Scalar distribution spec for generator weights: constant(c), uniform(a,b),
/// normal(mu,sigma). Parsed from strings like "normal:0,1".
struct DistSpec {
    enum class Kind { Constant, Uniform, Normal };
    Kind kind = Kind::Constant;
    double a = 0.0;  // value | lower | mean
    double b = 0.0;  // unused | upper | stddev

    static DistSpec constant(double value) { return {Kind::Constant, value, 0.0}; }
    static DistSpec uniform(double lo, double hi) {
        if (!(lo <= hi)) throw std::invalid_argument("DistSpec: uniform requires lo <= hi");
        return {Kind::Uniform, lo, hi};
    }
    static DistSpec normal(double mean, double sd) {
        if (!(sd >= 0.0)) throw std::invalid_argument("DistSpec: normal requires sd >= 0");
        return {Kind::Normal, mean, sd};
    }

    static DistSpec parse(const std::string& text);
    std::string to_string() const;

    double sample(Rng& rng) const {
        switch (kind) {
            case Kind::Constant: return a;
            case Kind::Uniform: return a + (b - a) * rng.next_unit();
            case Kind::Normal: return a + b * rng.next_normal();
        }
        throw std::logic_error("DistSpec: unreachable");
    }
};

}  // namespace netexp
