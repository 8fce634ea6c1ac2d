#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace usdsilo::rng {

// ---------------------------------------------------------------------------
// Philox4x32-10 counter-based generator
//
// Salmon et al., "Parallel random numbers: as easy as 1, 2, 3" (SC 2011).
// The stream position is a pure function of (key, counter), so draws keyed by
// (seed, path, step, factor) are identical no matter which thread asks first.
// ---------------------------------------------------------------------------

namespace detail {

constexpr uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void mulHiLo(uint32_t a, uint32_t b, uint32_t& lo, uint32_t& hi) {
    const uint64_t p = static_cast<uint64_t>(a) * b;
    lo = static_cast<uint32_t>(p);
    hi = static_cast<uint32_t>(p >> 32);
}

inline void philoxRound(std::array<uint32_t, 4>& ctr, const std::array<uint32_t, 2>& key) {
    uint32_t lo0, hi0, lo1, hi1;
    mulHiLo(kPhiloxM4x32A, ctr[0], lo0, hi0);
    mulHiLo(kPhiloxM4x32B, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace detail

/// One 128-bit Philox4x32-10 block.
inline std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> counter,
                                          std::array<uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += detail::kPhiloxW32A;
            key[1] += detail::kPhiloxW32B;
        }
        detail::philoxRound(counter, key);
    }
    return counter;
}

/// Uniform draw in the open interval (0, 1), keyed by (seed, path, step, idx).
inline double uniformOpen01(uint64_t seed, uint64_t path, uint32_t step, uint32_t idx) {
    const std::array<uint32_t, 4> ctr = {static_cast<uint32_t>(path),
                                         static_cast<uint32_t>(path >> 32), step, idx};
    const std::array<uint32_t, 2> key = {static_cast<uint32_t>(seed),
                                         static_cast<uint32_t>(seed >> 32)};
    const auto block = philox4x32(ctr, key);
    const uint64_t bits = (static_cast<uint64_t>(block[0]) << 32) | block[1];
    // 53 significant bits, centered in its cell: never exactly 0 or 1.
    return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// ---------------------------------------------------------------------------
// Inverse normal CDF, Wichura's algorithm AS 241 (PPND16).
// Absolute accuracy about 1e-15 over (0, 1).
// ---------------------------------------------------------------------------

inline double inverseNormalCdf(double p) {
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    if (!(r > 0.0)) return q < 0.0 ? -HUGE_VAL : HUGE_VAL;
    r = std::sqrt(-std::log(r));
    double x;
    if (r <= 5.0) {
        r -= 1.6;
        x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -x : x;
}

/// Standard normal draw keyed by (seed, path, step, idx).
inline double normalDraw(uint64_t seed, uint64_t path, uint32_t step, uint32_t idx) {
    return inverseNormalCdf(uniformOpen01(seed, path, step, idx));
}

}  // namespace usdsilo::rng
