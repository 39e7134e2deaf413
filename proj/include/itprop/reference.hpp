#pragma once

// Closed-form spectra and eigenfunctions used as oracles: the 3D oscillator,
// spherical and cylindrical boxes (via Bessel zeros) and the Coulomb problem.

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "itprop/error.hpp"

namespace itprop::reference {

struct AnalyticLevel {
    double energy = 0;
    int degeneracy = 1;
    std::map<std::string, int> quantum_numbers;
};

/// E_n = n + 3/2, g_n = (n+1)(n+2)/2.
inline AnalyticLevel ho_level(int n) {
    if (n < 0) throw Error(ErrorCode::InvalidArgument, "oscillator shell index must be nonnegative");
    return {n + 1.5, (n + 1) * (n + 2) / 2, {{"n", n}}};
}

/// Radial oscillator tower for fixed l: E = 2k + l + 3/2.
inline double ho_radial_energy(int l, int k) { return 2.0 * k + l + 1.5; }

/// Oscillator in the (rho, z) sector with azimuthal number m.
inline double ho_cylindrical_energy(int m, int k, int n_z) { return 2.0 * k + std::abs(m) + 1 + n_z + 0.5; }

/// First excited oscillator shell; member is the azimuthal number (-1, 0, +1).
inline std::complex<double> ho_phi1(int member, double r, double theta, double phi) {
    if (member < -1 || member > 1) throw Error(ErrorCode::InvalidArgument, "member must be -1, 0 or +1");
    if (r < 0) throw Error(ErrorCode::InvalidArgument, "r must be nonnegative");
    double const radial = r * std::exp(-0.5 * r * r) / std::pow(std::numbers::pi, 0.75);
    if (member == 0) return {std::sqrt(2.0) * radial * std::cos(theta), 0.0};
    double const amp = radial * std::sin(theta);
    return std::polar(amp, member * phi);
}

/// Spherical Bessel function j_l(x), x >= 0.
inline double sph_bessel_j(int l, double x) {
    if (l < 0) throw Error(ErrorCode::InvalidArgument, "order must be nonnegative");
    if (x < 0) throw Error(ErrorCode::InvalidArgument, "argument must be nonnegative");
    if (x < 1e-4) {
        // leading series term x^l / (2l+1)!!, with the first correction
        double term = 1;
        for (int i = 1; i <= l; ++i) term *= x / (2 * i + 1);
        return term * (1 - x * x / (2.0 * (2 * l + 3)));
    }
    double const j0 = std::sin(x) / x;
    if (l == 0) return j0;
    if (x > l) {
        double jm = j0;
        double j = std::sin(x) / (x * x) - std::cos(x) / x;
        for (int n = 1; n < l; ++n) {
            double const jp = (2 * n + 1) / x * j - jm;
            jm = j;
            j = jp;
        }
        return j;
    }
    // downward (Miller) recurrence, normalized by j_0
    int const start = l + 20 + static_cast<int>(std::sqrt(40.0 * (l + 1)));
    double jp = 0, j = 1e-30, result = 0;
    for (int n = start; n > 0; --n) {
        double const jm = (2 * n + 1) / x * j - jp;
        jp = j;
        j = jm;
        if (n - 1 == l) result = j;
        if (std::abs(j) > 1e200) {
            j *= 1e-200;
            jp *= 1e-200;
            result *= 1e-200;
        }
    }
    return result * (j0 / j);
}

/// Cylindrical Bessel function J_m(x), x >= 0: power series for moderate x,
/// downward recurrence normalized by J_0 + 2 sum J_2k = 1 beyond.
inline double bessel_j(int m, double x) {
    if (x < 0) throw Error(ErrorCode::InvalidArgument, "argument must be nonnegative");
    if (m < 0) return (m % 2 == 0 ? 1.0 : -1.0) * bessel_j(-m, x);
    if (x == 0) return m == 0 ? 1.0 : 0.0;
    if (x <= 12.0) {
        double const half = 0.5 * x;
        double term = 1;
        for (int i = 1; i <= m; ++i) term *= half / i;
        double sum = term;
        double const q = half * half;
        for (int k = 1; k < 200; ++k) {
            term *= -q / (static_cast<double>(k) * (k + m));
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum) && k > half) break;
        }
        return sum;
    }
    int start = 2 * ((std::max(m, static_cast<int>(x)) + 30 + static_cast<int>(std::sqrt(40.0 * x))) / 2);
    double jp = 0, j = 1e-30, even_sum = 0, result = 0;
    for (int n = start; n > 0; --n) {
        double const jm = 2.0 * n / x * j - jp;
        jp = j;
        j = jm;
        if (n - 1 == m) result = j;
        if ((n - 1) % 2 == 0 && n - 1 > 0) even_sum += j;
        if (std::abs(j) > 1e200) {
            j *= 1e-200;
            jp *= 1e-200;
            result *= 1e-200;
            even_sum *= 1e-200;
        }
    }
    double const norm = j + 2 * even_sum;
    return result / norm;
}

namespace detail {

// k-th positive zero by a forward sign scan from just above the origin, then bisection.
template <class F>
double kth_zero(F const& f, int k, double scan_from) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "zero index must be >= 1");
    double const dx = 0.05;
    double a = scan_from;
    double fa = f(a);
    int found = 0;
    for (int iter = 0; iter < 10'000'000; ++iter) {
        double const b = a + dx;
        double const fb = f(b);
        if (fb == 0 || (fa < 0) != (fb < 0)) {
            if (++found == k) {
                double lo = a, hi = b, flo = fa;
                if (fb == 0) return b;
                for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
                    double const mid = 0.5 * (lo + hi);
                    double const fm = f(mid);
                    if (fm == 0) return mid;
                    if ((fm < 0) == (flo < 0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
        }
        a = b;
        fa = fb;
    }
    throw Error(ErrorCode::InvalidArgument, "zero search did not terminate");
}

} // namespace detail

/// k-th positive zero of j_l (k >= 1).
inline double spherical_bessel_zero(int l, int k) {
    if (l < 0) throw Error(ErrorCode::InvalidArgument, "order must be nonnegative");
    return detail::kth_zero([l](double x) { return sph_bessel_j(l, x); }, k, 0.5 + l);
}

/// k-th positive zero of J_m (k >= 1).
inline double bessel_j_zero(int m, int k) {
    return detail::kth_zero([m](double x) { return bessel_j(m, x); }, k, 0.5 + std::abs(m));
}

/// Particle in a sphere of radius a: E = z_{l,k}^2 / (2 a^2), g = 2l + 1.
inline AnalyticLevel sphere_box_level(int l, int k, double a) {
    if (!(a > 0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
    double const z = spherical_bessel_zero(l, k);
    return {z * z / (2 * a * a), 2 * l + 1, {{"l", l}, {"k", k}}};
}

/// Particle in a cylinder of radius rho0 and length L; g = 1 for m = 0 else 2 (+-m).
inline AnalyticLevel cylinder_box_level(int m, int k, int n_z, double rho0, double length) {
    if (!(rho0 > 0) || !(length > 0)) throw Error(ErrorCode::InvalidArgument, "box dimensions must be positive");
    if (n_z < 1) throw Error(ErrorCode::InvalidArgument, "n_z must be >= 1");
    double const z = bessel_j_zero(m, k);
    double const axial = n_z * std::numbers::pi / length;
    return {z * z / (2 * rho0 * rho0) + 0.5 * axial * axial, m == 0 ? 1 : 2, {{"m", m}, {"k", k}, {"n_z", n_z}}};
}

/// Unconfined Coulomb problem H = -1/2 Laplacian - 1/r: E = -1/(2 n^2), g = n^2.
inline AnalyticLevel hydrogen_level(int n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "principal quantum number must be >= 1");
    return {-0.5 / (static_cast<double>(n) * n), n * n, {{"n", n}}};
}

} // namespace itprop::reference
