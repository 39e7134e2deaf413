#pragma once

// Dense symmetric eigensolver by cyclic Jacobi rotations. Sized for the small
// Rayleigh-Ritz matrices of the block solver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "itprop/error.hpp"

namespace itprop {

/// Row-major square matrix.
struct DenseMatrix {
    std::size_t n = 0;
    std::vector<double> a;

    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t size) : n(size), a(size * size, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

struct SymmetricEigen {
    std::vector<double> values;  // ascending
    DenseMatrix vectors;         // column j is the eigenvector for values[j]
};

inline SymmetricEigen jacobi_eigen(DenseMatrix m, double tol = 1e-15, int max_sweeps = 100) {
    std::size_t const n = m.n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-8 * (std::abs(m(i, j)) + std::abs(m(j, i)) + 1e-300))
                throw Error(ErrorCode::InvalidArgument, "jacobi_eigen requires a symmetric matrix");

    DenseMatrix v(n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1;

    auto off_norm = [&] {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += m(i, j) * m(i, j);
        return std::sqrt(2 * s);
    };
    double scale = 0;
    for (double x : m.a) scale += x * x;
    scale = std::sqrt(scale);

    for (int sweep = 0; sweep < max_sweeps && off_norm() > tol * scale; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double const apq = m(p, q);
                if (apq == 0) continue;
                double const theta = (m(q, q) - m(p, p)) / (2 * apq);
                double const t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1));
                double const c = 1 / std::sqrt(t * t + 1);
                double const s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double const mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double const mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                m(p, q) = m(q, p) = 0;
                for (std::size_t k = 0; k < n; ++k) {
                    double const vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return m(i, i) < m(j, j); });

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors = DenseMatrix(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = m(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

} // namespace itprop
