#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "itprop/reference.hpp"
#include "itprop/spherical_harmonics.hpp"

using namespace itprop;
using namespace itprop::reference;

constexpr double pi = std::numbers::pi;

TEST(Oscillator, Levels) {
    EXPECT_EQ(ho_level(0).energy, 1.5);
    EXPECT_EQ(ho_level(0).degeneracy, 1);
    EXPECT_EQ(ho_level(1).energy, 2.5);
    EXPECT_EQ(ho_level(1).degeneracy, 3);
    EXPECT_EQ(ho_level(2).degeneracy, 6);
    EXPECT_THROW(ho_level(-1), Error);
    EXPECT_EQ(ho_radial_energy(0, 1), 3.5);
    EXPECT_EQ(ho_radial_energy(2, 0), 3.5);
    EXPECT_EQ(ho_cylindrical_energy(1, 0, 0), 2.5);
    EXPECT_EQ(ho_cylindrical_energy(-1, 0, 1), 3.5);
}

// Summing (2l+1) over the radial towers, or (1 or 2) over the (rho, z) towers,
// must rebuild the 3D shell degeneracies.
TEST(Oscillator, SectorDegeneraciesAddUp) {
    for (int n = 0; n <= 6; ++n) {
        double const e = n + 1.5;
        int radial = 0, cyl = 0;
        for (int l = 0; l <= n; ++l)
            for (int k = 0; k <= n; ++k)
                if (ho_radial_energy(l, k) == e) radial += 2 * l + 1;
        for (int m = -n; m <= n; ++m)
            for (int k = 0; k <= n; ++k)
                for (int nz = 0; nz <= n; ++nz)
                    if (ho_cylindrical_energy(m, k, nz) == e) ++cyl;
        EXPECT_EQ(radial, ho_level(n).degeneracy) << n;
        EXPECT_EQ(cyl, ho_level(n).degeneracy) << n;
    }
}

TEST(Oscillator, Phi1Values) {
    EXPECT_NEAR(ho_phi1(0, 1.0, 0.0, 0.0).real(), 0.363500784398036, 1e-14);
    EXPECT_NEAR(std::abs(ho_phi1(1, 1.0, 0.0, 0.3)), 0.0, 1e-15);
    EXPECT_THROW(ho_phi1(2, 1.0, 0, 0), Error);
}

// Midpoint quadrature in spherical coordinates: the three members are orthonormal.
TEST(Oscillator, Phi1Orthonormal) {
    int const nr = 400, nt = 60, np = 60;
    double const rmax = 10, hr = rmax / nr, ht = pi / nt, hp = 2 * pi / np;
    std::complex<double> gram[3][3] = {};
    for (int i = 0; i < nr; ++i) {
        double const r = (i + 0.5) * hr;
        for (int j = 0; j < nt; ++j) {
            double const t = (j + 0.5) * ht;
            for (int k = 0; k < np; ++k) {
                double const p = (k + 0.5) * hp;
                double const w = r * r * std::sin(t) * hr * ht * hp;
                std::complex<double> v[3];
                for (int a = 0; a < 3; ++a) v[a] = ho_phi1(a - 1, r, t, p);
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) gram[a][b] += w * std::conj(v[a]) * v[b];
            }
        }
    }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) EXPECT_NEAR(std::abs(gram[a][b] - (a == b ? 1.0 : 0.0)), 0.0, 2e-3) << a << b;
}

TEST(Bessel, SphericalMatchesStd) {
    for (int l = 0; l <= 6; ++l)
        for (double x : {1e-5, 0.01, 0.3, 1.0, 2.5, 4.0, 7.0, 12.0, 25.0, 40.0}) {
            double const ref = std::sph_bessel(static_cast<unsigned>(l), x);
            EXPECT_NEAR(sph_bessel_j(l, x), ref, 1e-12 * std::max(1.0, std::abs(ref)) + 1e-300) << l << " " << x;
        }
    EXPECT_EQ(sph_bessel_j(0, 0.0), 1.0);
    EXPECT_EQ(sph_bessel_j(2, 0.0), 0.0);
    EXPECT_THROW(sph_bessel_j(-1, 1.0), Error);
}

TEST(Bessel, CylindricalMatchesStd) {
    for (int m = 0; m <= 6; ++m)
        for (double x : {0.0, 1e-3, 0.5, 2.0, 5.0, 9.0, 11.9, 12.1, 20.0, 35.0}) {
            double const ref = std::cyl_bessel_j(static_cast<double>(m), x);
            EXPECT_NEAR(bessel_j(m, x), ref, 1e-12) << m << " " << x;
        }
    EXPECT_NEAR(bessel_j(-1, 2.0), -std::cyl_bessel_j(1.0, 2.0), 1e-14);
}

TEST(Bessel, Zeros) {
    EXPECT_NEAR(spherical_bessel_zero(0, 1), pi, 1e-12);
    EXPECT_NEAR(spherical_bessel_zero(0, 3), 3 * pi, 1e-11);
    EXPECT_NEAR(spherical_bessel_zero(1, 1), 4.493409457909064, 1e-12);
    EXPECT_NEAR(spherical_bessel_zero(2, 1), 5.763459196894550, 1e-12);
    EXPECT_NEAR(bessel_j_zero(0, 1), 2.404825557695773, 1e-12);
    EXPECT_NEAR(bessel_j_zero(1, 1), 3.831705970207512, 1e-12);
    EXPECT_THROW(bessel_j_zero(0, 0), Error);
}

TEST(Bessel, ZerosAreRootsAndInterlace) {
    for (int l = 0; l <= 4; ++l)
        for (int k = 1; k <= 4; ++k) {
            double const z = spherical_bessel_zero(l, k);
            EXPECT_LE(std::abs(sph_bessel_j(l, z)), 1e-10);
            EXPECT_LT(z, spherical_bessel_zero(l + 1, k));
            EXPECT_LT(spherical_bessel_zero(l + 1, k), spherical_bessel_zero(l, k + 1));
            double const c = bessel_j_zero(l, k);
            EXPECT_LE(std::abs(bessel_j(l, c)), 1e-10);
            EXPECT_LT(c, bessel_j_zero(l + 1, k));
            EXPECT_LT(bessel_j_zero(l + 1, k), bessel_j_zero(l, k + 1));
        }
}

TEST(Boxes, Levels) {
    EXPECT_NEAR(sphere_box_level(0, 1, 1.0).energy, pi * pi / 2, 1e-11);
    EXPECT_NEAR(sphere_box_level(1, 1, 1.0).energy, 10.095364278213315, 1e-10);
    EXPECT_EQ(sphere_box_level(1, 1, 1.0).degeneracy, 3);
    EXPECT_NEAR(sphere_box_level(0, 1, 2.0).energy, pi * pi / 8, 1e-11);
    EXPECT_NEAR(cylinder_box_level(0, 1, 1, 1.0, 1.0).energy, 7.826395182018072, 1e-10);
    EXPECT_NEAR(cylinder_box_level(0, 1, 1, 1.0, 1.0).energy, 7.826394, 2e-6);
    EXPECT_EQ(cylinder_box_level(1, 1, 1, 1.0, 1.0).degeneracy, 2);
    EXPECT_THROW(cylinder_box_level(0, 1, 0, 1.0, 1.0), Error);
    EXPECT_THROW(sphere_box_level(0, 1, 0.0), Error);
}

TEST(Hydrogen, Levels) {
    EXPECT_EQ(hydrogen_level(1).energy, -0.5);
    EXPECT_EQ(hydrogen_level(2).energy, -0.125);
    EXPECT_EQ(hydrogen_level(3).degeneracy, 9);
    EXPECT_THROW(hydrogen_level(0), Error);
}

TEST(Harmonics, OrthonormalOnSphere) {
    int const nt = 200, np = 200;
    double const ht = pi / nt, hp = 2 * pi / np;
    std::vector<std::pair<int, int>> lm;
    for (int l = 0; l <= max_harmonic_degree; ++l)
        for (int m = -l; m <= l; ++m) lm.emplace_back(l, m);
    std::vector<std::vector<double>> gram(lm.size(), std::vector<double>(lm.size(), 0.0));
    for (int j = 0; j < nt; ++j) {
        double const t = (j + 0.5) * ht;
        for (int k = 0; k < np; ++k) {
            double const p = (k + 0.5) * hp;
            std::vector<double> y(lm.size());
            for (std::size_t a = 0; a < lm.size(); ++a) y[a] = real_spherical_harmonic(lm[a].first, lm[a].second, t, p);
            for (std::size_t a = 0; a < lm.size(); ++a)
                for (std::size_t b = 0; b < lm.size(); ++b) gram[a][b] += std::sin(t) * ht * hp * y[a] * y[b];
        }
    }
    for (std::size_t a = 0; a < lm.size(); ++a)
        for (std::size_t b = 0; b < lm.size(); ++b) EXPECT_NEAR(gram[a][b], a == b ? 1.0 : 0.0, 1e-3);
    EXPECT_THROW(real_spherical_harmonic(5, 0, 0.1, 0.1), Error);
}

TEST(Harmonics, LegendreMatchesStd) {
    for (int l = 0; l <= 4; ++l)
        for (int m = 0; m <= l; ++m)
            for (double x : {-0.9, -0.2, 0.0, 0.4, 0.95}) {
                // std::assoc_legendre omits the Condon-Shortley phase
                double const ref = (m % 2 ? -1.0 : 1.0) * std::assoc_legendre(l, m, x);
                EXPECT_NEAR(assoc_legendre(l, m, x), ref, 1e-12);
            }
}
