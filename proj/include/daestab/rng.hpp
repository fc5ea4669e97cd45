#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace daestab {

// Stateless counter-based generator (splitmix64 finalizer). A draw is a pure
// function of (seed, stream, counter), so sampling loops are deterministic
// for a fixed seed regardless of iteration order or thread schedule, and
// enlarging a sample extends the stream instead of reshuffling it.
class CounterRng {
public:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t key(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
        return mix(mix(seed ^ 0x6a09e667f3bcc909ULL * stream) ^
                   0xbb67ae8584caa73bULL * counter);
    }

    // uniform in [0, 1)
    static double u01(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
        return static_cast<double>(key(seed, stream, counter) >> 11) * 0x1.0p-53;
    }

    // standard normal (Box-Muller on two derived draws)
    static double gauss(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
        const std::uint64_t k = key(seed, stream, counter);
        const double u1 = static_cast<double>((mix(k) >> 11) | 1ULL) * 0x1.0p-53;
        const double u2 = static_cast<double>(mix(k ^ 0x9e3779b97f4a7c15ULL) >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // uniform point in the n-ball of given radius (gaussian direction,
    // radius by inverse-CDF of the volume measure)
    static std::vector<double> ball(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t counter, int n, double radius) {
        std::vector<double> v(n);
        double nrm2 = 0.0;
        for (int i = 0; i < n; ++i) {
            v[i] = gauss(seed, stream, counter * 2654435761ULL + i);
            nrm2 += v[i] * v[i];
        }
        const double nrm = std::sqrt(nrm2);
        if (nrm == 0.0) return std::vector<double>(n, 0.0);
        const double u = u01(seed, stream ^ 0x517cc1b727220a95ULL, counter);
        const double r = radius * std::pow(u, 1.0 / n);
        for (int i = 0; i < n; ++i) v[i] *= r / nrm;
        return v;
    }
};

} // namespace daestab
