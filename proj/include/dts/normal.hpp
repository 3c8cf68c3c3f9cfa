#pragma once
// Standard normal pdf/cdf helpers, including a log-cdf that stays finite far
// into the lower tail where Phi underflows.

#include <cmath>
#include <limits>

namespace dts {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double norm_pdf(double z) {
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double norm_cdf(double z) {
    return 0.5 * std::erfc(-z * kInvSqrt2);
}

// log Phi(z), usable for z as low as ~-1e7. For deep lower tails uses the
// asymptotic expansion Phi(z) ~ phi(z)/|z| * (1 - 1/z^2 + 3/z^4 - ...).
inline double norm_logcdf(double z) {
    if (z > -8.0) {
        const double p = norm_cdf(z);
        if (p > 0.0) return std::log(p);
    }
    const double z2 = z * z;
    double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -0.5 * z2 - 0.5 * std::log(2.0 * M_PI) - std::log(-z) + std::log(series);
}

}  // namespace dts
