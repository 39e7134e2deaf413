#pragma once

// Imaginary-time propagation: explicit Euler steps psi <- psi - dtau * H psi,
// renormalized every step, with optional projection against converged states.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "itprop/deflate.hpp"
#include "itprop/error.hpp"
#include "itprop/hamiltonian.hpp"
#include "itprop/mesh.hpp"

namespace itprop {

struct PropagationConfig {
    std::optional<double> dtau;  // empty: stable_dtau(h, safety)
    double safety = 0.8;
    std::size_t max_steps = 5'000'000;
    double energy_tol = 1e-9;    // on |d<H>/dtau| estimated between trace rows
    double variance_tol = 1e-8;  // on <H^2> - <H>^2
    std::size_t trace_stride = 100;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(safety > 0 && safety <= 1)) throw Error(ErrorCode::InvalidArgument, "safety must be in (0, 1]");
        if (dtau && !(*dtau > 0 && std::isfinite(*dtau))) throw Error(ErrorCode::InvalidArgument, "dtau must be positive");
        if (max_steps == 0) throw Error(ErrorCode::InvalidArgument, "max_steps must be positive");
        if (!(energy_tol > 0) || !(variance_tol > 0))
            throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
        if (trace_stride == 0) throw Error(ErrorCode::InvalidArgument, "trace_stride must be positive");
    }
};

struct TraceRow {
    double tau;
    double energy;     // <H>
    double energy_sq;  // <H^2>
    double pre_norm;   // |psi - dtau H psi| for the step taken from this state
};

using EnergyTrace = std::vector<TraceRow>;

/// safety / (sum over axes of 1/h^2 + max(centrifugal + max(V, 0))).
inline double stable_dtau(Hamiltonian const& h, double safety) {
    if (!(safety > 0 && safety <= 1)) throw Error(ErrorCode::InvalidArgument, "safety must be in (0, 1]");
    double s = 0;
    for (auto const& a : h.grid().axes()) s += 1.0 / (a.spacing * a.spacing);
    return safety / (s + h.max_local_term());
}

namespace detail {

// splitmix64; fixed across platforms, unlike the std distributions
inline std::uint64_t next_random(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double unit_random(std::uint64_t& state) {
    return static_cast<double>(next_random(state) >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double dot(std::span<double const> w, std::span<double const> a, std::span<double const> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * a[i] * b[i];
    return s;
}

// Largest pre-normalization norm a stable step can produce: the spectrum of H
// is bounded below by min V, and |1 - dtau lambda| <= 1 at the top end.
inline double growth_bound(Hamiltonian const& h, double dtau) {
    return std::max(1.0, 1.0 - dtau * h.min_potential()) * (1 + 1e-12);
}

} // namespace detail

/// Deterministic pseudo-random normalized start: entries in (0, 1] or [-1, 1], zero on walls.
inline Field random_initial(Hamiltonian const& h, std::uint64_t seed, bool strictly_positive) {
    Field f = h.zero_field();
    std::uint64_t state = seed;
    for (std::size_t k = 0; k < f.size(); ++k) {
        double const u = detail::unit_random(state);
        if (h.is_wall(k)) continue;
        f[k] = strictly_positive ? 1.0 - u : 2.0 * u - 1.0;
    }
    return normalize(std::move(f));
}

struct StepResult {
    Field state;
    double pre_norm;
};

/// One Euler step followed by renormalization.
inline StepResult step(Field const& f, Hamiltonian const& h, double dtau) {
    if (!(dtau > 0)) throw Error(ErrorCode::InvalidArgument, "dtau must be positive");
    Field next = h.apply(f);
    auto v = next.values();
    auto const src = f.values();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = src[k] - dtau * v[k];
    double const p = std::sqrt(detail::dot(f.grid().weights(), v, v));
    if (!std::isfinite(p) || p > detail::growth_bound(h, dtau))
        throw Error(ErrorCode::NumericalBlowup, "norm grew beyond the stable-step bound; dtau too large");
    if (!(p > 0)) throw Error(ErrorCode::ZeroNorm, "state annihilated by the step");
    next *= 1.0 / p;
    return {std::move(next), p};
}

struct RunResult {
    double energy = 0;
    Field state;
    EnergyTrace trace;
    bool converged = false;
    double dtau = 0;
    std::size_t steps = 0;

    double tau_final() const { return trace.empty() ? 0.0 : trace.back().tau; }
};

/// Propagates until the energy slope and the variance both fall below their
/// tolerances, or max_steps is reached. With a deflation basis, the state is
/// re-projected before every step.
inline RunResult run(Field const& start, Hamiltonian const& h, PropagationConfig const& cfg,
                     std::span<Field const> deflate_against = {}) {
    cfg.validate();
    h.require(start);
    double const dtau = cfg.dtau.value_or(stable_dtau(h, cfg.safety));
    double const bound = detail::growth_bound(h, dtau);
    auto const w = h.grid().weights();

    Field psi = deflate(start, deflate_against);
    {
        double const n = norm(psi);
        if (!(n >= 1e-12)) throw Error(ErrorCode::EmptyOverlap, "start lies inside the deflated subspace");
        psi *= 1.0 / n;
    }

    RunResult result;
    result.dtau = dtau;
    std::vector<double> hpsi(psi.size());
    std::optional<double> last_row_energy;

    for (std::size_t k = 0;; ++k) {
        if (!deflate_against.empty()) {
            psi = deflate(std::move(psi), deflate_against);
            psi *= 1.0 / norm(psi);
        }
        auto v = psi.values();
        h.apply_into(v, hpsi);

        bool const last = k == cfg.max_steps;
        if (k % cfg.trace_stride == 0 || last) {
            double const e = detail::dot(w, v, hpsi);
            double const e2 = detail::dot(w, hpsi, hpsi);
            double pre = 0, variance = 0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                double const x = v[i] - dtau * hpsi[i];
                double const r = hpsi[i] - e * v[i];
                pre += w[i] * x * x;
                variance += w[i] * r * r;
            }
            result.trace.push_back({static_cast<double>(k) * dtau, e, e2, std::sqrt(pre)});
            bool const slope_ok =
                last_row_energy &&
                std::abs(e - *last_row_energy) / (static_cast<double>(cfg.trace_stride) * dtau) < cfg.energy_tol;
            last_row_energy = e;
            if ((slope_ok && variance < cfg.variance_tol) || last) {
                result.converged = slope_ok && variance < cfg.variance_tol;
                result.energy = e;
                result.steps = k;
                result.state = std::move(psi);
                return result;
            }
        }

        double pre = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            double const x = v[i] - dtau * hpsi[i];
            v[i] = x;
            pre += w[i] * x * x;
        }
        pre = std::sqrt(pre);
        if (!std::isfinite(pre) || pre > bound)
            throw Error(ErrorCode::NumericalBlowup, "norm grew beyond the stable-step bound; dtau too large");
        if (!(pre > 0)) throw Error(ErrorCode::ZeroNorm, "state annihilated by the step");
        double const inv = 1.0 / pre;
        for (auto& x : v) x *= inv;
    }
}

inline RunResult run(Field const& start, Hamiltonian const& h, PropagationConfig const& cfg,
                     std::vector<Field> const& deflate_against) {
    return run(start, h, cfg, std::span<Field const>(deflate_against));
}

/// Energy implied by the norm decay of the last recorded step, -ln(pre_norm) / dtau.
inline double decay_rate_energy(EnergyTrace const& trace, double dtau) {
    if (trace.size() < 2) throw Error(ErrorCode::InvalidTrace, "trace needs at least two rows");
    double const p = trace.back().pre_norm;
    if (!(p > 0)) throw Error(ErrorCode::InvalidTrace, "nonpositive pre_norm");
    if (!(dtau > 0)) throw Error(ErrorCode::InvalidArgument, "dtau must be positive");
    return -std::log(p) / dtau;
}

} // namespace itprop
