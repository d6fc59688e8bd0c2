#pragma once

// Counter-based random streams. Each Monte Carlo trial owns a SplitMix64
// stream whose state is a pure function of (master seed, trial index), so the
// draws of a trial never depend on which worker ran it.

#include "qfcsim/errors.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

namespace qfcsim {

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// SplitMix64; satisfies UniformRandomBitGenerator.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t state = 0) : state_(state) {}

    static RandomStream substream(std::uint64_t master_seed, std::uint64_t index) {
        const std::uint64_t a = detail::mix64(master_seed + 0x9e3779b97f4a7c15ULL);
        return RandomStream(detail::mix64(a ^ detail::mix64(index + 0x632be59bd9b4e019ULL)));
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return detail::mix64(state_);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1).
    double uniform_open() {
        double u = 0.0;
        while (u == 0.0) u = uniform();
        return u;
    }

    /// Poisson(mean) by sequential CDF inversion.
    std::int64_t poisson(double mean) {
        detail::require(mean > 0.0 && mean < 500.0, "poisson mean must lie in (0, 500)");
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        std::int64_t k = 0;
        const auto cap = static_cast<std::int64_t>(mean + 40.0 * std::sqrt(mean) + 40.0);
        while (u >= cdf && k < cap) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

private:
    std::uint64_t state_;
};

}  // namespace qfcsim
