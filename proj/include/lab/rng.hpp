#pragma once

#include <cmath>
#include <cstdint>

namespace lab {

/// Counter-based splitmix64 stream. A stream is fully determined by
/// (seed, stream_id); draws are a pure function of the counter, so path-
/// and event-level sub-streams are reproducible independent of thread
/// scheduling.
class Rng {
  public:
    Rng() = default;
    Rng(std::uint64_t seed, std::uint64_t stream_id) : state_(mix(seed ^ mix(stream_id))) {}

    static Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
        return Rng(seed, mix(a ^ mix(b ^ mix(c))));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// U(0,1), strictly inside the open interval.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        const double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    /// Exact Poisson by uniform products; cost O(mean). Chunked to keep
    /// exp(-mean) away from underflow.
    long poisson(double mean) {
        long total = 0;
        while (mean > 500.0) {
            total += poisson(500.0);
            mean -= 500.0;
        }
        return total + poisson_small(mean);
    }

    /// index in [0, n)
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  private:
    long poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        long k = 0;
        double prod = uniform();
        while (prod > limit) {
            prod *= uniform();
            ++k;
        }
        return k;
    }

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_ = 0x853c49e6748fea9bULL;
};

}  // namespace lab
