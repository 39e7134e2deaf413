#pragma once

// Uniform finite-difference grids in radial, cylindrical (rho, z) and
// Cartesian geometry, the weighted inner product they induce, and the real
// field type that lives on them.

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itprop/error.hpp"

namespace itprop {

enum class Geometry { Radial, Cylindrical, Cartesian3 };

inline char const* to_string(Geometry g) {
    switch (g) {
        case Geometry::Radial: return "radial";
        case Geometry::Cylindrical: return "cylindrical";
        case Geometry::Cartesian3: return "cartesian";
    }
    return "unknown";
}

struct Axis {
    double spacing = 0;
    double extent = 0;          // r_max / rho_max for staggered axes, half-width otherwise
    bool staggered = false;     // nodes at (i + 1/2) h, i = 0..n-1
    std::vector<double> nodes;

    std::size_t size() const { return nodes.size(); }
};

class Grid {
  public:
    Grid(Geometry geometry, std::vector<Axis> axes) : geometry_(geometry), axes_(std::move(axes)) {
        std::size_t n = 1;
        for (auto const& a : axes_) n *= a.size();
        count_ = n;
        weights_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            auto const x = coordinates(k);
            switch (geometry_) {
                case Geometry::Radial:
                    weights_[k] = x[0] * x[0] * axes_[0].spacing;
                    break;
                case Geometry::Cylindrical:
                    weights_[k] = x[0] * axes_[0].spacing * axes_[1].spacing;
                    break;
                case Geometry::Cartesian3:
                    weights_[k] = axes_[0].spacing * axes_[1].spacing * axes_[2].spacing;
                    break;
            }
        }
    }

    Geometry geometry() const { return geometry_; }
    std::vector<Axis> const& axes() const { return axes_; }
    Axis const& axis(std::size_t i) const { return axes_.at(i); }
    std::size_t size() const { return count_; }
    std::span<double const> weights() const { return weights_; }

    /// Multi-index of a flat node index; the last axis varies fastest.
    std::array<std::size_t, 3> index3(std::size_t k) const {
        std::array<std::size_t, 3> idx{0, 0, 0};
        for (std::size_t a = axes_.size(); a-- > 0;) {
            idx[a] = k % axes_[a].size();
            k /= axes_[a].size();
        }
        return idx;
    }

    std::size_t flat(std::array<std::size_t, 3> const& idx) const {
        std::size_t k = 0;
        for (std::size_t a = 0; a < axes_.size(); ++a) k = k * axes_[a].size() + idx[a];
        return k;
    }

    /// (r) for radial, (rho, z) for cylindrical, (x, y, z) for Cartesian; unused slots are 0.
    std::array<double, 3> coordinates(std::size_t k) const {
        auto const idx = index3(k);
        std::array<double, 3> x{0, 0, 0};
        for (std::size_t a = 0; a < axes_.size(); ++a) x[a] = axes_[a].nodes[idx[a]];
        return x;
    }

    bool same_layout(Grid const& other) const {
        if (geometry_ != other.geometry_ || axes_.size() != other.axes_.size()) return false;
        for (std::size_t a = 0; a < axes_.size(); ++a) {
            auto const& p = axes_[a];
            auto const& q = other.axes_[a];
            if (p.size() != q.size() || p.spacing != q.spacing || p.staggered != q.staggered ||
                p.nodes.front() != q.nodes.front())
                return false;
        }
        return true;
    }

    std::string describe() const {
        std::string s = to_string(geometry_);
        for (auto const& a : axes_) {
            s += " [n=" + std::to_string(a.size()) + " h=" + std::to_string(a.spacing) + "]";
        }
        return s;
    }

  private:
    Geometry geometry_;
    std::vector<Axis> axes_;
    std::size_t count_ = 0;
    std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<Grid const>;

namespace detail {

inline std::size_t checked_count(double extent, double spacing, std::size_t minimum) {
    if (!(spacing > 0) || !(extent > 0) || !std::isfinite(spacing) || !std::isfinite(extent))
        throw Error(ErrorCode::InvalidArgument, "spacing and extent must be positive");
    double const ratio = extent / spacing;
    if (ratio > 1e8) throw Error(ErrorCode::InvalidArgument, "grid too large");
    auto const n = static_cast<std::size_t>(std::floor(ratio + 1e-9));
    if (n < minimum) throw Error(ErrorCode::DomainTooSmall, "fewer than the minimum number of nodes per axis");
    return n;
}

inline Axis staggered_axis(double spacing, double extent) {
    Axis a;
    a.spacing = spacing;
    a.extent = extent;
    a.staggered = true;
    auto const n = checked_count(extent, spacing, 4);
    a.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) a.nodes[i] = (static_cast<double>(i) + 0.5) * spacing;
    return a;
}

// Symmetric about the origin; origin is a node when the count is odd.
inline Axis centered_axis(double spacing, double half_width, std::size_t minimum) {
    Axis a;
    a.spacing = spacing;
    a.extent = half_width;
    auto const n = checked_count(2 * half_width, spacing, minimum - 1) + 1;
    a.nodes.resize(n);
    double const mid = 0.5 * static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) a.nodes[i] = (static_cast<double>(i) - mid) * spacing;
    return a;
}

inline double pick(std::span<double const> v, std::size_t i) { return v.size() == 1 ? v[0] : v[i]; }

} // namespace detail

/// Builds a grid. Radial takes one (h, r_max); Cylindrical takes (h_rho, h_z) and
/// (rho_max, z half-width); Cartesian3 takes per-axis or broadcast (h, half-width).
inline GridPtr build_grid(Geometry geometry, std::span<double const> spacings, std::span<double const> extents) {
    std::size_t const dims = geometry == Geometry::Radial ? 1 : geometry == Geometry::Cylindrical ? 2 : 3;
    auto const ok = [dims](std::size_t n) { return n == dims || n == 1; };
    if (spacings.empty() || extents.empty() || !ok(spacings.size()) || !ok(extents.size()))
        throw Error(ErrorCode::InvalidArgument, "wrong number of spacings/extents for geometry");

    std::vector<Axis> axes;
    switch (geometry) {
        case Geometry::Radial:
            axes.push_back(detail::staggered_axis(spacings[0], extents[0]));
            break;
        case Geometry::Cylindrical:
            axes.push_back(detail::staggered_axis(detail::pick(spacings, 0), detail::pick(extents, 0)));
            axes.push_back(detail::centered_axis(detail::pick(spacings, 1), detail::pick(extents, 1), 4));
            break;
        case Geometry::Cartesian3:
            // Three nodes per axis is the smallest centred grid with an interior origin node.
            for (std::size_t a = 0; a < 3; ++a)
                axes.push_back(detail::centered_axis(detail::pick(spacings, a), detail::pick(extents, a), 3));
            break;
    }
    return std::make_shared<Grid const>(geometry, std::move(axes));
}

inline GridPtr build_grid(Geometry geometry, double spacing, double extent) {
    double const h[1] = {spacing};
    double const e[1] = {extent};
    return build_grid(geometry, std::span<double const>(h), std::span<double const>(e));
}

/// Mode numbers carried by fields and operators: l on radial grids, m on cylindrical ones.
struct Modes {
    std::optional<int> l;
    std::optional<int> m;

    bool operator==(Modes const&) const = default;

    static Modes defaults_for(Geometry g) {
        Modes m;
        if (g == Geometry::Radial) m.l = 0;
        if (g == Geometry::Cylindrical) m.m = 0;
        return m;
    }
};

inline void validate_modes(Geometry g, Modes const& modes) {
    if (modes.l.has_value() != (g == Geometry::Radial))
        throw Error(ErrorCode::IncompatibleFields, "mode l must be present exactly on radial grids");
    if (modes.m.has_value() != (g == Geometry::Cylindrical))
        throw Error(ErrorCode::IncompatibleFields, "mode m must be present exactly on cylindrical grids");
    if (modes.l && *modes.l < 0) throw Error(ErrorCode::InvalidArgument, "mode l must be nonnegative");
}

class Field {
  public:
    Field() = default;

    Field(GridPtr grid, Modes modes) : grid_(std::move(grid)), modes_(modes), values_(grid_->size(), 0.0) {
        validate_modes(grid_->geometry(), modes_);
    }

    Field(GridPtr grid, Modes modes, std::vector<double> values)
        : grid_(std::move(grid)), modes_(modes), values_(std::move(values)) {
        validate_modes(grid_->geometry(), modes_);
        if (values_.size() != grid_->size())
            throw Error(ErrorCode::InvalidArgument, "value count does not match grid");
        for (double v : values_)
            if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite field value");
    }

    GridPtr const& grid_ptr() const { return grid_; }
    Grid const& grid() const { return *grid_; }
    Modes const& modes() const { return modes_; }
    std::size_t size() const { return values_.size(); }

    std::span<double const> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    bool compatible(Field const& other) const {
        return modes_ == other.modes_ &&
               (grid_ == other.grid_ || (grid_ && other.grid_ && grid_->same_layout(*other.grid_)));
    }

    Field& operator*=(double s) {
        for (auto& v : values_) v *= s;
        return *this;
    }

    /// this += a * other
    Field& axpy(double a, Field const& other) {
        require_compatible(other);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * other.values_[i];
        return *this;
    }

    void require_compatible(Field const& other) const {
        if (!compatible(other)) throw Error(ErrorCode::IncompatibleFields, "fields live on different grids or modes");
    }

  private:
    GridPtr grid_;
    Modes modes_;
    std::vector<double> values_;
};

/// Sum over nodes of w * f * g, accumulated in node order.
inline double inner_product(Field const& f, Field const& g) {
    f.require_compatible(g);
    auto const w = f.grid().weights();
    auto const a = f.values();
    auto const b = g.values();
    double s = 0;
    // w * (a * b) keeps <f, g> and <g, f> bitwise equal
    for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * (a[i] * b[i]);
    return s;
}

inline double norm(Field const& f) { return std::sqrt(inner_product(f, f)); }

inline Field normalize(Field f) {
    double const n2 = inner_product(f, f);
    if (!(n2 > 0)) throw Error(ErrorCode::ZeroNorm, "cannot normalize a zero field");
    f *= 1.0 / std::sqrt(n2);
    return f;
}

} // namespace itprop
