#pragma once

#include <random>

namespace logmosaic::rng {

// Uniform double in [0, 1) from the top 53 bits; keeps generated data
// independent of the standard library's distribution implementations.
inline double canonical(std::mt19937_64& gen) {
    return double(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * canonical(gen);
}

}  // namespace logmosaic::rng
