#pragma once

// Multi-level solvers built on imaginary-time propagation:
//   - solve_ladder: sequential deflation, one state at a time. Inside a
//     degenerate multiplet the states it returns are seed-dependent
//     combinations of the true eigenfunctions; only their span is meaningful.
//   - block_solve:  K fields propagated together with periodic Rayleigh-Ritz
//     rotations, which resolves degenerate members individually.
//   - mode_scan:    per-l (radial) or per-m (cylindrical) ladders on the
//     symmetry-reduced operators, weighted by the angular multiplicity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "itprop/deflate.hpp"
#include "itprop/error.hpp"
#include "itprop/hamiltonian.hpp"
#include "itprop/jacobi.hpp"
#include "itprop/mesh.hpp"
#include "itprop/propagation.hpp"
#include "itprop/spherical_harmonics.hpp"

namespace itprop {

enum class Provenance { Ladder, Block, ModeScan };

inline char const* to_string(Provenance p) {
    switch (p) {
        case Provenance::Ladder: return "ladder";
        case Provenance::Block: return "block";
        case Provenance::ModeScan: return "mode_scan";
    }
    return "unknown";
}

struct Level {
    double energy = 0;
    /// Observed multiplicity. For mode-scan levels each state stands for its
    /// whole angular family, so this is the sum of 2l+1 (or 1/2) weights.
    int degeneracy = 1;
    std::vector<Field> states;
    std::vector<double> member_energies;
    std::vector<int> modes;            // l or m per state; mode-scan only
    std::vector<EnergyTrace> traces;   // one per state
    Provenance provenance = Provenance::Ladder;
    bool subspace_only = false;
    bool converged = true;
    double tau_final = 0;
};

struct SpectrumResult {
    std::vector<Level> levels;
    std::string model;
    std::string grid;
    double degeneracy_tol = 1e-4;
};

inline constexpr double default_degeneracy_tol = 1e-4;

/// Sorts, then merges neighbours with |E_i - E_j| <= tol_rel * max(1, |E_i|).
/// Merged energy is the multiplicity-weighted mean.
inline std::vector<Level> group_degenerate(std::vector<Level> levels, double tol_rel) {
    if (!(tol_rel > 0)) throw Error(ErrorCode::InvalidArgument, "degeneracy tolerance must be positive");
    std::stable_sort(levels.begin(), levels.end(), [](Level const& a, Level const& b) { return a.energy < b.energy; });

    std::vector<Level> out;
    double prev = 0;
    for (auto& lv : levels) {
        double const e = lv.energy;
        if (lv.member_energies.empty()) lv.member_energies.assign(std::max<std::size_t>(lv.states.size(), 1), e);
        if (!out.empty() && std::abs(e - prev) <= tol_rel * std::max(1.0, std::abs(e))) {
            Level& g = out.back();
            double const wsum = g.degeneracy + lv.degeneracy;
            g.energy = (g.energy * g.degeneracy + e * lv.degeneracy) / wsum;
            g.degeneracy += lv.degeneracy;
            for (auto& s : lv.states) g.states.push_back(std::move(s));
            for (double x : lv.member_energies) g.member_energies.push_back(x);
            for (int m : lv.modes) g.modes.push_back(m);
            for (auto& t : lv.traces) g.traces.push_back(std::move(t));
            g.converged = g.converged && lv.converged;
            g.tau_final = std::max(g.tau_final, lv.tau_final);
            g.subspace_only = g.subspace_only || lv.subspace_only || g.provenance == Provenance::Ladder;
        } else {
            out.push_back(std::move(lv));
        }
        prev = e;
    }
    return out;
}

namespace detail {

inline std::uint64_t member_seed(std::uint64_t seed, std::uint64_t index) {
    return seed + 0x632be59bd9b4e019ULL * index;
}

inline Level level_from_run(RunResult&& r, Provenance provenance) {
    Level lv;
    lv.energy = r.energy;
    lv.member_energies = {r.energy};
    lv.converged = r.converged;
    lv.tau_final = r.tau_final();
    lv.provenance = provenance;
    lv.traces.push_back(std::move(r.trace));
    lv.states.push_back(std::move(r.state));
    return lv;
}

// Ungrouped ladder members, in the order they were found.
inline std::vector<Level> ladder_members(Hamiltonian const& h, int n_states, PropagationConfig const& cfg,
                                         std::uint64_t seed) {
    if (n_states < 1) throw Error(ErrorCode::InvalidArgument, "n_states must be >= 1");
    std::vector<Field> basis;
    std::vector<Level> members;
    for (int i = 0; i < n_states; ++i) {
        // a positive start always overlaps the nodeless ground state
        Field start = random_initial(h, member_seed(seed, static_cast<std::uint64_t>(i)), i == 0);
        auto r = run(start, h, cfg, basis);
        basis.push_back(r.state);
        members.push_back(level_from_run(std::move(r), Provenance::Ladder));
    }
    return members;
}

} // namespace detail

inline SpectrumResult solve_ladder(Hamiltonian const& h, int n_states, PropagationConfig const& cfg,
                                   double degeneracy_tol = default_degeneracy_tol) {
    SpectrumResult out;
    out.model = describe(h.potential());
    out.grid = h.grid().describe();
    out.degeneracy_tol = degeneracy_tol;
    out.levels = group_degenerate(detail::ladder_members(h, n_states, cfg, cfg.seed), degeneracy_tol);
    return out;
}

struct BlockOptions {
    std::size_t rr_stride = 10;  // Euler steps between Rayleigh-Ritz rotations
    double degeneracy_tol = default_degeneracy_tol;
};

namespace detail {

// Modified Gram-Schmidt with reorthogonalization. Returns false when a column
// loses more than 1e-6 of its norm, i.e. the Gram matrix condition exceeds ~1e12.
inline bool orthonormalize(std::vector<Field>& q) {
    for (std::size_t j = 0; j < q.size(); ++j) {
        double const before = norm(q[j]);
        if (!(before > 0)) return false;
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t i = 0; i < j; ++i) q[j].axpy(-inner_product(q[i], q[j]), q[i]);
        double const after = norm(q[j]);
        if (!(after > 1e-6 * before)) return false;
        q[j] *= 1.0 / after;
    }
    return true;
}

// q <- q * v for a K x K rotation v
inline void rotate(std::vector<Field>& q, DenseMatrix const& v) {
    std::size_t const k = q.size();
    std::size_t const n = q.front().size();
    std::vector<double> row(k);
    for (std::size_t node = 0; node < n; ++node) {
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0;
            for (std::size_t i = 0; i < k; ++i) s += q[i][node] * v(i, j);
            row[j] = s;
        }
        for (std::size_t j = 0; j < k; ++j) q[j][node] = row[j];
    }
}

struct BlockRun {
    std::vector<Field> states;
    std::vector<double> ritz;
    std::vector<EnergyTrace> traces;
    bool converged = false;
    double tau = 0;
};

inline BlockRun block_iterate(Hamiltonian const& h, std::size_t block, PropagationConfig const& cfg,
                              BlockOptions const& opt, std::uint64_t seed) {
    std::vector<Field> q;
    for (std::size_t i = 0; i < block; ++i) q.push_back(random_initial(h, member_seed(seed, i), i == 0));
    if (!orthonormalize(q)) throw Error(ErrorCode::DegenerateStart, "initial block is rank deficient");

    double const dtau = cfg.dtau.value_or(stable_dtau(h, cfg.safety));
    double const bound = growth_bound(h, dtau);
    auto const w = h.grid().weights();
    std::size_t const n = h.grid().size();

    std::vector<Field> hq(block, h.zero_field());
    std::vector<double> pre(block, 1.0);
    std::vector<double> previous;
    BlockRun out;
    out.traces.resize(block);

    for (std::size_t steps = 0;;) {
        for (std::size_t i = 0; i < block; ++i) h.apply_into(q[i].values(), hq[i].values());
        DenseMatrix m(block);
        for (std::size_t i = 0; i < block; ++i)
            for (std::size_t j = i; j < block; ++j) m(i, j) = m(j, i) = inner_product(q[i], hq[j]);
        auto const eig = jacobi_eigen(m);
        rotate(q, eig.vectors);
        rotate(hq, eig.vectors);

        double const tau = static_cast<double>(steps) * dtau;
        bool all_ok = !previous.empty();
        for (std::size_t i = 0; i < block; ++i) {
            double const theta = eig.values[i];
            double variance = 0, e2 = 0;
            for (std::size_t k = 0; k < n; ++k) {
                double const r = hq[i][k] - theta * q[i][k];
                variance += w[k] * r * r;
                e2 += w[k] * hq[i][k] * hq[i][k];
            }
            out.traces[i].push_back({tau, theta, e2, pre[i]});
            if (!previous.empty()) {
                double const slope =
                    std::abs(theta - previous[i]) / (static_cast<double>(opt.rr_stride) * dtau);
                all_ok = all_ok && slope < cfg.energy_tol && variance < cfg.variance_tol;
            }
        }
        previous = eig.values;
        if (all_ok || steps >= cfg.max_steps) {
            out.converged = all_ok;
            out.states = std::move(q);
            out.ritz = eig.values;
            out.tau = tau;
            return out;
        }

        for (std::size_t s = 0; s < opt.rr_stride && steps < cfg.max_steps; ++s, ++steps) {
            for (std::size_t i = 0; i < block; ++i) {
                if (s > 0) h.apply_into(q[i].values(), hq[i].values());
                auto v = q[i].values();
                auto const hv = hq[i].values();
                double p = 0;
                for (std::size_t k = 0; k < n; ++k) {
                    v[k] -= dtau * hv[k];
                    p += w[k] * v[k] * v[k];
                }
                p = std::sqrt(p);
                if (!std::isfinite(p) || p > bound)
                    throw Error(ErrorCode::NumericalBlowup, "norm grew beyond the stable-step bound; dtau too large");
                if (!(p > 0)) throw Error(ErrorCode::ZeroNorm, "block member annihilated by the step");
                q[i] *= 1.0 / p;
                pre[i] = p;
            }
        }
        if (!orthonormalize(q)) throw Error(ErrorCode::DegenerateStart, "block collapsed between Rayleigh-Ritz cycles");
    }
}

} // namespace detail

/// Subspace iteration with Rayleigh-Ritz extraction. Ritz pairs are returned
/// as individually resolved states even inside degenerate multiplets.
inline SpectrumResult block_solve(Hamiltonian const& h, std::size_t block_size, PropagationConfig const& cfg,
                                  BlockOptions const& opt = {}) {
    cfg.validate();
    if (block_size < 1) throw Error(ErrorCode::InvalidArgument, "block size must be >= 1");
    if (block_size > h.interior_count())
        throw Error(ErrorCode::InvalidArgument, "block size exceeds the number of interior nodes");
    if (opt.rr_stride == 0) throw Error(ErrorCode::InvalidArgument, "rr_stride must be positive");

    detail::BlockRun run;
    try {
        run = detail::block_iterate(h, block_size, cfg, opt, cfg.seed);
    } catch (Error const& e) {
        if (e.code() != ErrorCode::DegenerateStart) throw;
        // one retry from fresh seeds
        run = detail::block_iterate(h, block_size, cfg, opt, detail::member_seed(cfg.seed, 0x5eed) ^ 0xa5a5a5a5ULL);
    }

    std::vector<Level> levels;
    for (std::size_t i = 0; i < block_size; ++i) {
        Level lv;
        lv.energy = run.ritz[i];
        lv.member_energies = {run.ritz[i]};
        lv.states.push_back(std::move(run.states[i]));
        lv.traces.push_back(std::move(run.traces[i]));
        lv.provenance = Provenance::Block;
        lv.converged = run.converged;
        lv.tau_final = run.tau;
        levels.push_back(std::move(lv));
    }

    SpectrumResult out;
    out.model = describe(h.potential());
    out.grid = h.grid().describe();
    out.degeneracy_tol = opt.degeneracy_tol;
    out.levels = group_degenerate(std::move(levels), opt.degeneracy_tol);
    return out;
}

/// Angular multiplicity of one reduced-problem eigenvalue.
inline int mode_weight(Geometry g, int mode) {
    if (g == Geometry::Radial) return 2 * mode + 1;
    return mode == 0 ? 1 : 2;
}

/// Ladders on the reduced operators for mode = 0..mode_max (l on radial
/// grids, |m| on cylindrical ones), merged into one weighted spectrum.
inline SpectrumResult mode_scan(GridPtr const& grid, PotentialSpec const& potential, int mode_max,
                                int states_per_mode, PropagationConfig const& cfg,
                                double degeneracy_tol = default_degeneracy_tol) {
    Geometry const g = grid->geometry();
    if (g == Geometry::Cartesian3) throw Error(ErrorCode::InvalidArgument, "mode_scan needs a radial or cylindrical grid");
    if (mode_max < 0) throw Error(ErrorCode::InvalidArgument, "mode_max must be >= 0");

    std::vector<Level> all;
    for (int mode = 0; mode <= mode_max; ++mode) {
        Modes modes;
        if (g == Geometry::Radial) modes.l = mode;
        else modes.m = mode;
        Hamiltonian const h(grid, potential, modes);
        auto members = detail::ladder_members(h, states_per_mode, cfg,
                                              detail::member_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(mode)));
        for (auto& lv : members) {
            lv.provenance = Provenance::ModeScan;
            lv.degeneracy = mode_weight(g, mode);
            lv.modes = {mode};
            all.push_back(std::move(lv));
        }
    }
    auto grouped = group_degenerate(std::move(all), degeneracy_tol);
    // A reduced problem can still carry accidental degeneracies (the oscillator
    // in (rho, z)); such states are unresolved combinations.
    for (auto& lv : grouped) {
        auto sorted = lv.modes;
        std::sort(sorted.begin(), sorted.end());
        lv.subspace_only = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
    }

    SpectrumResult out;
    out.model = describe(potential);
    out.grid = grid->describe();
    out.degeneracy_tol = degeneracy_tol;
    out.levels = std::move(grouped);
    return out;
}

/// Linear interpolation of a radial function sampled at staggered nodes.
/// Below the first node it follows R ~ r^l (constant for l = 0); it falls
/// linearly to zero at the outer wall.
inline double interpolate_radial(Field const& radial, int l, double r) {
    auto const& ax = radial.grid().axis(0);
    double const h = ax.spacing;
    std::size_t const n = ax.size();
    double const r0 = ax.nodes[0];
    if (r <= r0) return l == 0 ? radial[0] : radial[0] * r / r0;
    double const edge = static_cast<double>(n) * h;
    if (r >= edge) return 0;
    double const rlast = ax.nodes[n - 1];
    if (r >= rlast) return radial[n - 1] * (edge - r) / (edge - rlast);
    double const s = r / h - 0.5;
    auto const i = static_cast<std::size_t>(s);
    double const t = s - static_cast<double>(i);
    return (1 - t) * radial[i] + t * radial[i + 1];
}

/// R_l(r) Y_lm(theta, phi) on a Cartesian grid, using real harmonics for m != 0; normalized.
inline Field reconstruct_3d(Field const& radial_state, int l, int m, GridPtr const& target) {
    if (radial_state.grid().geometry() != Geometry::Radial)
        throw Error(ErrorCode::InvalidArgument, "reconstruct_3d needs a radial state");
    if (target->geometry() != Geometry::Cartesian3)
        throw Error(ErrorCode::InvalidArgument, "reconstruct_3d targets a Cartesian grid");
    if (l < 0 || l > max_harmonic_degree || std::abs(m) > l)
        throw Error(ErrorCode::UnsupportedMode, "reconstruction implemented for 0 <= l <= 4, |m| <= l");

    Field out(target, Modes{});
    for (std::size_t k = 0; k < target->size(); ++k) {
        auto const x = target->coordinates(k);
        double const r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        double const theta = r > 0 ? std::acos(std::clamp(x[2] / r, -1.0, 1.0)) : 0.0;
        double const phi = std::atan2(x[1], x[0]);
        out[k] = interpolate_radial(radial_state, l, r) * real_spherical_harmonic(l, m, theta, phi);
    }
    return normalize(std::move(out));
}

} // namespace itprop
