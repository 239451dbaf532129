#pragma once

#include <cmath>
#include <cstdint>

#include "skewlab/common.hpp"

namespace skewlab {

// splitmix64. Chosen over std::mt19937_64 + distributions because the output
// stream must be identical across standard libraries and thread counts; every
// sampling loop seeds one Rng per work item as Rng(seed, itemIndex).
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : state_(seed + 0x9E3779B97F4A7C15ULL * (stream + 1)) {
        next();
        next();
    }

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Polar sampling (fixed consumption of two draws, no rejection loop).
    cnum unit_disk() {
        double r = std::sqrt(uniform01());
        double th = 2.0 * kPi * uniform01();
        return cnum(r * std::cos(th), r * std::sin(th));
    }

    cnum disk(cnum center, double radius) { return center + radius * unit_disk(); }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

private:
    std::uint64_t state_;
};

}  // namespace skewlab
