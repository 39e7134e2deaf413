#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "itprop/error.hpp"

namespace itprop {

inline constexpr int max_harmonic_degree = 4;

/// Associated Legendre function P_l^m(x), 0 <= m <= l, with the Condon-Shortley phase.
inline double assoc_legendre(int l, int m, double x) {
    double pmm = 1;
    double const s = std::sqrt(std::max(0.0, (1 - x) * (1 + x)));
    for (int i = 1; i <= m; ++i) pmm *= -(2 * i - 1) * s;
    if (l == m) return pmm;
    double pm1 = x * (2 * m + 1) * pmm;
    if (l == m + 1) return pm1;
    double pl = 0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pl = ((2 * ll - 1) * x * pm1 - (ll + m - 1) * pmm) / (ll - m);
        pmm = pm1;
        pm1 = pl;
    }
    return pl;
}

/// Real spherical harmonic: cos(m phi) form for m > 0, sin(|m| phi) form for m < 0.
/// Orthonormal on the unit sphere.
inline double real_spherical_harmonic(int l, int m, double theta, double phi) {
    if (l < 0 || l > max_harmonic_degree || std::abs(m) > l)
        throw Error(ErrorCode::UnsupportedMode, "spherical harmonics implemented for 0 <= l <= 4, |m| <= l");
    int const am = std::abs(m);
    double ratio = 1;  // (l - |m|)! / (l + |m|)!
    for (int i = l - am + 1; i <= l + am; ++i) ratio /= i;
    double const norm = std::sqrt((2 * l + 1) / (4 * std::numbers::pi) * ratio);
    double const p = assoc_legendre(l, am, std::cos(theta));
    if (m == 0) return norm * p;
    double const angular = m > 0 ? std::cos(am * phi) : std::sin(am * phi);
    return std::numbers::sqrt2 * norm * p * angular;
}

} // namespace itprop
