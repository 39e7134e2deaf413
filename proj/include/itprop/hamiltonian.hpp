#pragma once

// Model potentials and the discrete operator H = -1/2 Laplacian + V in each
// geometry. The radial and rho derivatives use the conservative (flux) form so
// that H is exactly symmetric in the grid's weighted inner product.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "itprop/error.hpp"
#include "itprop/mesh.hpp"

namespace itprop {

namespace potential {

struct HarmonicOscillator {
    bool operator==(HarmonicOscillator const&) const = default;
};
struct SphericalBox {
    double a = 1;
    bool operator==(SphericalBox const&) const = default;
};
// |z| < length / 2
struct CylindricalBox {
    double rho0 = 1;
    double length = 1;
    bool operator==(CylindricalBox const&) const = default;
};
// 0 < z < height, rho < base_radius (1 - z / height)
struct ConeDot {
    double base_radius = 1;
    double height = 1;
    bool operator==(ConeDot const&) const = default;
};
/// -1/r, optionally confined to r < confinement.
struct HydrogenicDot {
    std::optional<double> confinement;
    bool operator==(HydrogenicDot const&) const = default;
};

} // namespace potential

using PotentialSpec = std::variant<potential::HarmonicOscillator, potential::SphericalBox, potential::CylindricalBox,
                                   potential::ConeDot, potential::HydrogenicDot>;

inline std::string describe(PotentialSpec const& p) {
    return std::visit(
        [](auto const& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, potential::HarmonicOscillator>) return "harmonic_oscillator";
            else if constexpr (std::is_same_v<T, potential::SphericalBox>) return "spherical_box a=" + std::to_string(v.a);
            else if constexpr (std::is_same_v<T, potential::CylindricalBox>)
                return "cylindrical_box rho0=" + std::to_string(v.rho0) + " length=" + std::to_string(v.length);
            else if constexpr (std::is_same_v<T, potential::ConeDot>)
                return "cone_dot base_radius=" + std::to_string(v.base_radius) + " height=" + std::to_string(v.height);
            else
                return v.confinement ? "hydrogenic_dot a=" + std::to_string(*v.confinement) : "hydrogenic_dot";
        },
        p);
}

inline void validate(PotentialSpec const& p) {
    auto positive = [](double x) { return x > 0 && std::isfinite(x); };
    bool ok = std::visit(
        [&](auto const& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, potential::SphericalBox>) return positive(v.a);
            else if constexpr (std::is_same_v<T, potential::CylindricalBox>) return positive(v.rho0) && positive(v.length);
            else if constexpr (std::is_same_v<T, potential::ConeDot>) return positive(v.base_radius) && positive(v.height);
            else if constexpr (std::is_same_v<T, potential::HydrogenicDot>) return !v.confinement || positive(*v.confinement);
            else return true;
        },
        p);
    if (!ok) throw Error(ErrorCode::InvalidArgument, "potential parameters must be positive");
}

inline bool compatible(PotentialSpec const& p, Geometry g) {
    if (g == Geometry::Cartesian3 || std::holds_alternative<potential::HarmonicOscillator>(p)) return true;
    bool const spherical =
        std::holds_alternative<potential::SphericalBox>(p) || std::holds_alternative<potential::HydrogenicDot>(p);
    return spherical ? g == Geometry::Radial : g == Geometry::Cylindrical;
}

/// Potential at a Cartesian point; std::nullopt marks a wall (state pinned to zero).
/// Region boundaries are walls: a node sitting exactly on the surface is outside.
inline std::optional<double> potential_at(PotentialSpec const& p, std::array<double, 3> const& xyz) {
    double const rho = std::hypot(xyz[0], xyz[1]);
    double const z = xyz[2];
    double const r = std::hypot(rho, z);
    return std::visit(
        [&](auto const& v) -> std::optional<double> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, potential::HarmonicOscillator>) {
                return 0.5 * r * r;
            } else if constexpr (std::is_same_v<T, potential::SphericalBox>) {
                if (r < v.a) return 0.0;
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, potential::CylindricalBox>) {
                if (rho < v.rho0 && std::abs(z) < 0.5 * v.length) return 0.0;
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, potential::ConeDot>) {
                if (z > 0 && z < v.height && rho < v.base_radius * (1 - z / v.height)) return 0.0;
                return std::nullopt;
            } else {
                if (v.confinement && !(r < *v.confinement)) return std::nullopt;
                if (r == 0) return std::nullopt;
                return -1.0 / r;
            }
        },
        p);
}

/// Grid point in the Cartesian frame used by potential_at.
inline std::array<double, 3> cartesian_point(Grid const& grid, std::size_t k) {
    auto const c = grid.coordinates(k);
    switch (grid.geometry()) {
        case Geometry::Radial: return {0, 0, c[0]};
        case Geometry::Cylindrical: return {c[0], 0, c[1]};
        case Geometry::Cartesian3: return c;
    }
    return c;
}

/// Discrete Hamiltonian for one (grid, potential, mode) triple. Immutable after
/// construction; node potentials, wall mask and stencil coefficients are cached.
///
/// Boundaries: staggered axes (r, rho) carry a Dirichlet wall exactly at the
/// outer edge n*h via an odd ghost value; centred axes treat the node beyond
/// the last one as zero. At r = 0 / rho = 0 the inner flux face has zero area,
/// so no axis condition enters the stencil; the centrifugal term supplies it.
class Hamiltonian {
  public:
    Hamiltonian(GridPtr grid, PotentialSpec potential, Modes modes)
        : grid_(std::move(grid)), potential_(std::move(potential)), modes_(modes) {
        validate_modes(grid_->geometry(), modes_);
        validate(potential_);
        if (!compatible(potential_, grid_->geometry()))
            throw Error(ErrorCode::InvalidArgument, "potential kind " + describe(potential_) +
                                                        " is not compatible with " + to_string(grid_->geometry()) +
                                                        " geometry");
        build();
    }

    GridPtr const& grid_ptr() const { return grid_; }
    Grid const& grid() const { return *grid_; }
    PotentialSpec const& potential() const { return potential_; }
    Modes const& modes() const { return modes_; }

    std::span<std::uint8_t const> wall() const { return wall_; }
    bool is_wall(std::size_t k) const { return wall_[k] != 0; }
    std::size_t interior_count() const { return interior_; }

    /// max over non-wall nodes of centrifugal + max(V, 0)
    double max_local_term() const { return max_local_; }
    /// min over non-wall nodes of V (used to bound the norm growth of a stable step)
    double min_potential() const { return min_potential_; }

    double centrifugal_at(std::size_t k) const {
        auto const c = grid_->coordinates(k);
        if (modes_.l) return 0.5 * (*modes_.l) * (*modes_.l + 1) / (c[0] * c[0]);
        if (modes_.m) return 0.5 * (*modes_.m) * (*modes_.m) / (c[0] * c[0]);
        return 0;
    }

    Field zero_field() const { return Field(grid_, modes_); }

    void apply_into(std::span<double const> in, std::span<double> out) const {
        double const* src = in.data();
        std::vector<double> masked;
        if (interior_ != in.size()) {
            masked.assign(in.begin(), in.end());
            for (std::size_t k = 0; k < masked.size(); ++k)
                if (wall_[k]) masked[k] = 0;
            src = masked.data();
        }
        double* dst = out.data();
        switch (grid_->geometry()) {
            case Geometry::Radial: apply_radial(src, dst); break;
            case Geometry::Cylindrical: apply_cylindrical(src, dst); break;
            case Geometry::Cartesian3: apply_cartesian(src, dst); break;
        }
        if (interior_ != in.size())
            for (std::size_t k = 0; k < out.size(); ++k)
                if (wall_[k]) dst[k] = 0;
    }

    Field apply(Field const& f) const {
        require(f);
        Field out = zero_field();
        apply_into(f.values(), out.values());
        return out;
    }

    void require(Field const& f) const {
        if (f.modes() != modes_ || !(f.grid_ptr() == grid_ || f.grid().same_layout(*grid_)))
            throw Error(ErrorCode::IncompatibleFields, "field does not match the Hamiltonian's grid or modes");
    }

  private:
    void build() {
        auto const& g = *grid_;
        std::size_t const n = g.size();
        wall_.assign(n, 0);
        diag_.assign(n, 0.0);
        interior_ = 0;
        max_local_ = 0;
        min_potential_ = std::numeric_limits<double>::infinity();

        for (std::size_t k = 0; k < n; ++k) {
            auto const v = potential_at(potential_, cartesian_point(g, k));
            if (!v) {
                wall_[k] = 1;
                continue;
            }
            ++interior_;
            double const cent = centrifugal_at(k);
            diag_[k] = *v + cent;
            max_local_ = std::max(max_local_, cent + std::max(*v, 0.0));
            min_potential_ = std::min(min_potential_, *v);
        }
        if (interior_ == 0) throw Error(ErrorCode::DomainTooSmall, "every grid node lies inside a wall");

        auto const& axes = g.axes();
        if (g.geometry() == Geometry::Cartesian3) {
            for (std::size_t a = 0; a < 3; ++a) axis_coef_[a] = 0.5 / (axes[a].spacing * axes[a].spacing);
            double const d = 2 * (axis_coef_[0] + axis_coef_[1] + axis_coef_[2]);
            for (auto& x : diag_) x += d;
            return;
        }

        // staggered first axis: r (weight r^2) or rho (weight rho)
        auto const& ax = axes[0];
        double const h = ax.spacing;
        int const power = g.geometry() == Geometry::Radial ? 2 : 1;
        std::size_t const nr = ax.size();
        lower_.assign(nr, 0.0);
        upper_.assign(nr, 0.0);
        std::vector<double> radial_diag(nr, 0.0);
        for (std::size_t i = 0; i < nr; ++i) {
            double const ri = ax.nodes[i];
            double const face_lo = static_cast<double>(i) * h;
            double const face_hi = static_cast<double>(i + 1) * h;
            double const denom = 2 * std::pow(ri, power) * h * h;
            lower_[i] = std::pow(face_lo, power) / denom;
            upper_[i] = std::pow(face_hi, power) / denom;
            radial_diag[i] = lower_[i] + upper_[i];
        }
        radial_diag[nr - 1] += upper_[nr - 1];  // odd ghost: f_n = -f_{n-1}
        upper_[nr - 1] = 0;

        std::size_t const nz = g.geometry() == Geometry::Cylindrical ? axes[1].size() : 1;
        if (g.geometry() == Geometry::Cylindrical) axis_coef_[1] = 0.5 / (axes[1].spacing * axes[1].spacing);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nz; ++j) diag_[i * nz + j] += radial_diag[i] + 2 * axis_coef_[1];
    }

    void apply_radial(double const* f, double* out) const {
        std::size_t const n = grid_->size();
        double const* lo = lower_.data();
        double const* hi = upper_.data();
        double const* d = diag_.data();
        out[0] = d[0] * f[0] - hi[0] * f[1];
        for (std::size_t i = 1; i + 1 < n; ++i) out[i] = d[i] * f[i] - lo[i] * f[i - 1] - hi[i] * f[i + 1];
        out[n - 1] = d[n - 1] * f[n - 1] - lo[n - 1] * f[n - 2];
    }

    void apply_cylindrical(double const* f, double* out) const {
        std::size_t const nr = grid_->axis(0).size();
        std::size_t const nz = grid_->axis(1).size();
        double const cz = axis_coef_[1];
        for (std::size_t i = 0; i < nr; ++i) {
            double const lo = lower_[i];
            double const hi = upper_[i];
            for (std::size_t j = 0; j < nz; ++j) {
                std::size_t const k = i * nz + j;
                double v = diag_[k] * f[k];
                if (i > 0) v -= lo * f[k - nz];
                if (i + 1 < nr) v -= hi * f[k + nz];
                if (j > 0) v -= cz * f[k - 1];
                if (j + 1 < nz) v -= cz * f[k + 1];
                out[k] = v;
            }
        }
    }

    void apply_cartesian(double const* f, double* out) const {
        std::size_t const nx = grid_->axis(0).size();
        std::size_t const ny = grid_->axis(1).size();
        std::size_t const nz = grid_->axis(2).size();
        std::size_t const sx = ny * nz;
        std::size_t const sy = nz;
        double const cx = axis_coef_[0], cy = axis_coef_[1], cz = axis_coef_[2];
        for (std::size_t ix = 0; ix < nx; ++ix) {
            for (std::size_t iy = 0; iy < ny; ++iy) {
                std::size_t const base = ix * sx + iy * sy;
                for (std::size_t iz = 0; iz < nz; ++iz) {
                    std::size_t const k = base + iz;
                    double v = diag_[k] * f[k];
                    if (ix > 0) v -= cx * f[k - sx];
                    if (ix + 1 < nx) v -= cx * f[k + sx];
                    if (iy > 0) v -= cy * f[k - sy];
                    if (iy + 1 < ny) v -= cy * f[k + sy];
                    if (iz > 0) v -= cz * f[k - 1];
                    if (iz + 1 < nz) v -= cz * f[k + 1];
                    out[k] = v;
                }
            }
        }
    }

    GridPtr grid_;
    PotentialSpec potential_;
    Modes modes_;
    std::vector<std::uint8_t> wall_;
    std::vector<double> diag_;
    std::vector<double> lower_, upper_;
    std::array<double, 3> axis_coef_{0, 0, 0};
    std::size_t interior_ = 0;
    double max_local_ = 0;
    double min_potential_ = 0;
};

inline double expectation_H(Hamiltonian const& h, Field const& f) {
    double const n2 = inner_product(f, f);
    if (!(n2 > 0)) throw Error(ErrorCode::ZeroNorm, "expectation of a zero field");
    return inner_product(f, h.apply(f)) / n2;
}

inline double expectation_H2(Hamiltonian const& h, Field const& f) {
    double const n2 = inner_product(f, f);
    if (!(n2 > 0)) throw Error(ErrorCode::ZeroNorm, "expectation of a zero field");
    auto const hf = h.apply(f);
    return inner_product(hf, hf) / n2;
}

} // namespace itprop
