#pragma once

// Brute-force reference for small operators: assemble H column by column from
// apply(), symmetrize with the quadrature weights, and diagonalize densely.
// Independent of the propagation and Jacobi code paths under test.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "itprop/hamiltonian.hpp"

namespace itprop::dense {

struct DenseOperator {
    Eigen::MatrixXd matrix;     // H in the node basis
    Eigen::MatrixXd symmetric;  // W^{1/2} H W^{-1/2}
    std::vector<std::size_t> interior;
};

inline DenseOperator assemble(Hamiltonian const& h) {
    DenseOperator out;
    for (std::size_t k = 0; k < h.grid().size(); ++k)
        if (!h.is_wall(k)) out.interior.push_back(k);
    auto const n = static_cast<Eigen::Index>(out.interior.size());
    out.matrix.resize(n, n);
    auto const w = h.grid().weights();
    for (Eigen::Index j = 0; j < n; ++j) {
        Field e = h.zero_field();
        e[out.interior[j]] = 1;
        auto const col = h.apply(e);
        for (Eigen::Index i = 0; i < n; ++i) out.matrix(i, j) = col[out.interior[i]];
    }
    out.symmetric.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out.symmetric(i, j) =
                std::sqrt(w[out.interior[i]]) * out.matrix(i, j) / std::sqrt(w[out.interior[j]]);
    return out;
}

/// Ascending eigenvalues of the discrete operator.
inline std::vector<double> dense_eigenvalues(Hamiltonian const& h) {
    auto const op = assemble(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (op.symmetric + op.symmetric.transpose()),
                                                      Eigen::EigenvaluesOnly);
    auto const& ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

} // namespace itprop::dense
