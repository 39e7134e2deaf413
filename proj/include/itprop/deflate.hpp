#pragma once

#include <span>
#include <vector>

#include "itprop/mesh.hpp"

namespace itprop {

/// Removes the components of f along an orthonormal basis (two passes of
/// modified Gram-Schmidt). The result is not renormalized.
inline Field deflate(Field f, std::span<Field const> basis) {
    for (auto const& b : basis) f.require_compatible(b);
    for (int pass = 0; pass < 2; ++pass)
        for (auto const& b : basis) f.axpy(-inner_product(b, f), b);
    return f;
}

inline Field deflate(Field f, std::vector<Field> const& basis) {
    return deflate(std::move(f), std::span<Field const>(basis));
}

} // namespace itprop
