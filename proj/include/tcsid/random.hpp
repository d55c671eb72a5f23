#pragma once

/**
 * @file random.hpp
 * @brief Portable seeded random stream.
 *
 * Engine: std::mt19937_64, whose output sequence is fixed by the C++
 * standard for a given seed. Distributions are not taken from <random>
 * (their algorithms are implementation-defined); instead:
 *   uniform  u = (next() >> 11) * 2^-53                       in [0, 1)
 *   normal   z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)           (Box-Muller, cosine branch only)
 * Every normal deviate consumes exactly two engine outputs, so any
 * reimplementation with MT19937-64 reproduces the stream bit for bit
 * up to libm rounding of log/cos/sqrt.
 */

#include "tcsid/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace tcsid {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    Vector normal_vector(Eigen::Index n) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i) = normal();
        }
        return v;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace tcsid
