#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ticketd {

/// Deterministic random source. mt19937_64 output is pinned by the standard
/// and all derivations below avoid std::*_distribution, whose results are
/// implementation-defined, so identical seeds give identical streams on any
/// platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next() { return gen_(); }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    /// Fisher-Yates shuffle with a fixed visitation order.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    /// Index drawn from a normalized cumulative distribution (ascending,
    /// last entry ~1). Returns the first index whose cdf exceeds the draw.
    size_t pick_cdf(const std::vector<double>& cdf) {
        const double u = uniform();
        size_t lo = 0, hi = cdf.size() - 1;
        while (lo < hi) {
            const size_t mid = (lo + hi) / 2;
            if (cdf[mid] <= u) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        return lo;
    }

private:
    std::mt19937_64 gen_;
};

} // namespace ticketd
