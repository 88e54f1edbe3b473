#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace mdlan {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Rational approximation of the standard normal quantile (Acklam's
/// algorithm, max absolute error ≈ 1.15e-9). Pure arithmetic, so seeded
/// Gaussian streams are identical on every platform.
inline double inverse_normal_cdf(double p) {
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;
    constexpr double phigh = 1.0 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= phigh) {
        q = p - 0.5;
        r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace detail

/// SplitMix64: counter-based 64-bit generator. All synthetic data in the
/// library flows from this generator so artifacts reproduce bit-for-bit
/// from a seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        return detail::mix64(state_);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the inverse CDF applied to a strictly interior
    /// uniform sample.
    double gaussian() {
        const double u = (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
        return detail::inverse_normal_cdf(u);
    }

    /// Integer in [0, bound) via 128-bit multiply-shift.
    std::uint64_t below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

private:
    std::uint64_t state_;
};

/// Deterministic combination of seed words for derived streams (per-trial,
/// per-cell seeding).
inline std::uint64_t combine_seed(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0x8000000080003ull;
    for (std::uint64_t w : words)
        h = detail::mix64(h ^ (w + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2)));
    return h;
}

/// Bit pattern of a double, for hashing real-valued seed components.
inline std::uint64_t seed_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

}  // namespace mdlan
