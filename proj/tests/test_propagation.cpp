#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dense_oracle.hpp"
#include "itprop/propagation.hpp"

using namespace itprop;

namespace {

Modes l0() { return Modes{0, std::nullopt}; }

// Small radial oscillator: 30 nodes, cheap to diagonalize and to propagate.
Hamiltonian small_ho(int l = 0) {
    return Hamiltonian(build_grid(Geometry::Radial, 0.2, 6.0), potential::HarmonicOscillator{}, Modes{l, std::nullopt});
}

Field dense_eigenvector(Hamiltonian const& h, int index, double* lambda) {
    auto const op = dense::assemble(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (op.symmetric + op.symmetric.transpose()));
    *lambda = es.eigenvalues()(index);
    Field v = h.zero_field();
    auto const w = h.grid().weights();
    for (std::size_t i = 0; i < op.interior.size(); ++i)
        v[op.interior[i]] = es.eigenvectors()(static_cast<Eigen::Index>(i), index) / std::sqrt(w[op.interior[i]]);
    return normalize(std::move(v));
}

} // namespace

TEST(StableDtau, BoxValues) {
    Hamiltonian const cart(build_grid(Geometry::Cartesian3, 0.1, 1.2), potential::SphericalBox{1.0}, Modes{});
    EXPECT_NEAR(stable_dtau(cart, 0.8), 0.8 / 300.0, 1e-15);
    EXPECT_NEAR(stable_dtau(cart, 0.8), 2.6667e-3, 1e-7);
    Hamiltonian const radial(build_grid(Geometry::Radial, 0.02, 1.0), potential::SphericalBox{1.0}, l0());
    EXPECT_NEAR(stable_dtau(radial, 0.8), 3.2e-4, 1e-15);
}

TEST(StableDtau, RejectsBadSafety) {
    auto const h = small_ho();
    for (double s : {0.0, -0.5, 1.5}) {
        try {
            stable_dtau(h, s);
            FAIL() << s;
        } catch (Error const& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
        }
    }
    EXPECT_NO_THROW(stable_dtau(h, 1.0));
}

TEST(StableDtau, PotentialAndCentrifugalTighten) {
    auto const h0 = small_ho(0);
    auto const h2 = small_ho(2);
    Hamiltonian const box(build_grid(Geometry::Radial, 0.2, 6.0), potential::SphericalBox{10.0}, l0());
    EXPECT_LT(stable_dtau(h0, 0.8), stable_dtau(box, 0.8));
    EXPECT_LT(stable_dtau(h2, 0.8), stable_dtau(h0, 0.8));
}

TEST(RandomInitial, DeterministicNormalizedAndMasked) {
    Hamiltonian const h(build_grid(Geometry::Cartesian3, 0.25, 1.5), potential::SphericalBox{1.2}, Modes{});
    auto const a = random_initial(h, 42, true);
    auto const b = random_initial(h, 42, true);
    EXPECT_NEAR(inner_product(a, a), 1.0, 1e-12);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k], b[k]);
        if (h.is_wall(k)) {
            EXPECT_EQ(a[k], 0.0);
        } else {
            EXPECT_GT(a[k], 0.0);
        }
    }
    auto const c = random_initial(h, 43, false);
    bool has_negative = false;
    for (std::size_t k = 0; k < c.size(); ++k) has_negative = has_negative || c[k] < 0;
    EXPECT_TRUE(has_negative);
    EXPECT_LT(std::abs(inner_product(random_initial(h, 1, false), c)), 0.99);
}

TEST(Step, EigenvectorIsFixedPoint) {
    auto const h = small_ho();
    double lambda = 0;
    Field v = dense_eigenvector(h, 0, &lambda);
    double const dtau = 1e-3;
    auto const r = step(v, h, dtau);
    EXPECT_NEAR(r.pre_norm, 1 - dtau * lambda, 1e-12);
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(r.state[k], v[k], 1e-11);
}

TEST(Step, DampsExcitedComponentsRelativeToGround) {
    auto const h = small_ho();
    double l0v = 0, l1v = 0;
    Field v0 = dense_eigenvector(h, 0, &l0v);
    Field v1 = dense_eigenvector(h, 1, &l1v);
    Field mix = v0;
    mix.axpy(1.0, v1);
    double const dtau = stable_dtau(h, 0.8);
    auto const r = step(normalize(mix), h, dtau);
    double const ratio = inner_product(v1, r.state) / inner_product(v0, r.state);
    EXPECT_NEAR(ratio, (1 - dtau * l1v) / (1 - dtau * l0v), 1e-10);
    EXPECT_LT(ratio, 1.0);
}

TEST(Step, OversizedStepBlowsUp) {
    auto const h = small_ho();
    double const dtau = 10 * stable_dtau(h, 0.8);
    Field f = random_initial(h, 5, false);
    try {
        for (int i = 0; i < 200; ++i) f = step(f, h, dtau).state;
        FAIL();
    } catch (Error const& e) {
        EXPECT_EQ(e.code(), ErrorCode::NumericalBlowup);
    }
}

TEST(Run, RadialOscillatorGroundState) {
    Hamiltonian const h(build_grid(Geometry::Radial, 0.05, 8.0), potential::HarmonicOscillator{}, l0());
    PropagationConfig cfg;
    auto const r = run(random_initial(h, 1, true), h, cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.energy, 1.5, 1e-3);
    // the Euler factor 1 - dtau E gives the decay rate an O(dtau) bias
    EXPECT_NEAR(decay_rate_energy(r.trace, r.dtau), -std::log(1 - r.dtau * r.energy) / r.dtau, 1e-9);
    EXPECT_NEAR(decay_rate_energy(r.trace, r.dtau), 1.5, 5e-3);
    EXPECT_GT(r.steps, 0u);
    EXPECT_DOUBLE_EQ(r.tau_final(), static_cast<double>(r.steps) * r.dtau);
}

TEST(Run, SphereBoxGroundState) {
    Hamiltonian const h(build_grid(Geometry::Radial, 0.02, 1.0), potential::SphericalBox{1.0}, l0());
    auto const r = run(random_initial(h, 1, true), h, PropagationConfig{});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.energy, std::numbers::pi * std::numbers::pi / 2, 0.01 * std::numbers::pi * std::numbers::pi / 2);
}

TEST(Run, StepBudgetReportsNonConvergence) {
    auto const h = small_ho();
    PropagationConfig cfg;
    cfg.max_steps = 50;
    auto const r = run(random_initial(h, 1, true), h, cfg);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.steps, 50u);
    EXPECT_DOUBLE_EQ(r.trace.back().tau, 50 * r.dtau);
}

TEST(Run, StartInsideDeflatedSpaceFails) {
    auto const h = small_ho();
    double lambda = 0;
    std::vector<Field> basis{dense_eigenvector(h, 0, &lambda)};
    try {
        run(basis[0], h, PropagationConfig{}, basis);
        FAIL();
    } catch (Error const& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyOverlap);
    }
}

TEST(DecayRate, Values) {
    EnergyTrace t{{0, 2, 4, 0.99}, {0.1, 1.6, 2.6, 0.9985}};
    EXPECT_NEAR(decay_rate_energy(t, 1e-3), 1.501126126267091, 1e-9);
    EnergyTrace bad{{0, 2, 4, 0.99}, {0.1, 1.6, 2.6, 0.0}};
    try {
        decay_rate_energy(bad, 1e-3);
        FAIL();
    } catch (Error const& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidTrace);
    }
    EXPECT_THROW(decay_rate_energy(EnergyTrace{{0, 1, 1, 0.9}}, 1e-3), Error);
}

// <H> never increases under a stable step, and its centered tau-difference
// matches -2 Var(H) once the stiff modes of the random start have decayed
// (a few dozen steps) and while the per-step drop is well above roundoff.
TEST(Run, MonotoneDescentAndDescentIdentity) {
    auto const h = small_ho(1);
    PropagationConfig cfg;
    cfg.trace_stride = 1;
    cfg.max_steps = 3000;
    auto const r = run(random_initial(h, 17, false), h, cfg);
    ASSERT_GT(r.trace.size(), 100u);
    std::size_t checked = 0;
    for (std::size_t i = 1; i + 1 < r.trace.size(); ++i) {
        auto const& t = r.trace;
        EXPECT_LE(t[i].energy, t[i - 1].energy + 1e-12);
        double const var = t[i].energy_sq - t[i].energy * t[i].energy;
        if (i < 50 || 2 * r.dtau * var < 1e-10 * std::max(1.0, std::abs(t[i].energy))) continue;
        double const centered = (t[i + 1].energy - t[i - 1].energy) / (2 * r.dtau);
        EXPECT_NEAR(centered, -2 * var, 0.05 * 2 * var) << i;
        ++checked;
    }
    EXPECT_GT(checked, 50u);
}

TEST(Run, ConvergesToDiscreteGroundState) {
    for (int l : {0, 1, 2}) {
        auto const h = small_ho(l);
        PropagationConfig cfg;
        cfg.energy_tol = 1e-12;
        cfg.variance_tol = 1e-14;
        auto const r = run(random_initial(h, 3, true), h, cfg);
        EXPECT_TRUE(r.converged);
        EXPECT_NEAR(r.energy, dense::dense_eigenvalues(h).front(), 1e-8) << l;
    }
}

TEST(Run, DeflatedRunStaysOrthogonal) {
    auto const h = small_ho();
    PropagationConfig cfg;
    auto const g = run(random_initial(h, 1, true), h, cfg);
    std::vector<Field> basis{g.state};
    auto const e = run(random_initial(h, 2, false), h, cfg, basis);
    EXPECT_LE(std::abs(inner_product(g.state, e.state)), 1e-10);
    auto const dense = dense::dense_eigenvalues(h);
    EXPECT_NEAR(e.energy, dense[1], 1e-6);
}

TEST(Deflate, RemovesComponents) {
    auto const g = build_grid(Geometry::Cartesian3, 1.0, 1.0);
    Field e0(g, Modes{}), e1(g, Modes{}), f(g, Modes{});
    e0[0] = 1;
    e1[1] = 1;
    f[0] = 3;
    f[1] = -2;
    f[2] = 5;
    std::vector<Field> basis{e0, e1};
    auto const d = deflate(f, basis);
    EXPECT_EQ(d[0], 0.0);
    EXPECT_EQ(d[1], 0.0);
    EXPECT_EQ(d[2], 5.0);
    EXPECT_EQ(deflate(f, std::vector<Field>{})[0], 3.0);
    EXPECT_THROW(deflate(Field(build_grid(Geometry::Radial, 0.5, 2.0), l0()), basis), Error);
}

TEST(Config, Validation) {
    PropagationConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.dtau = -1;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    cfg.trace_stride = 0;
    EXPECT_THROW(cfg.validate(), Error);
}
