#include "asph/integrator.hpp"
#include "support/solver_checks.hpp"

#include <gtest/gtest.h>

using namespace asph;

namespace {

using Osc = std::array<double, 2>;  // (x, v)

Osc harmonic(double omega, double t_end, int steps) {
    Osc y{1.0, 0.0};
    const double dt = t_end / steps;
    auto rate = [omega](const Osc& s) { return Osc{s[1], -omega * omega * s[0]}; };
    auto adv = [](const Osc& s, const Osc& r, double h) { return Osc{s[0] + h * r[0], s[1] + h * r[1]}; };
    for (int n = 0; n < steps; ++n) y = predictor_corrector(y, dt, rate, adv);
    return y;
}

ParticleSet<2> lone_particle() {
    ParticleSet<2> s;
    Particle<2> p;
    p.m = 1.0;
    p.rho = 1.0;
    p.v = Vec<2>{{0.3, -0.1}};
    s.particles.push_back(p);
    return s;
}

}  // namespace

TEST(Integrator, ConstantAccelerationIsIntegratedExactly) {
    SimConfig cfg;
    cfg.dp = 1.0;
    cfg.dt = 0.01;
    cfg.xsph_eps = 0.0;
    cfg.body_force = {2.0, -9.81, 0.0};
    const auto mat = MaterialModel::elastic(1.0, 1.0, 0.0);
    Solver<2> solver(lone_particle(), mat, cfg);
    for (int n = 0; n < 100; ++n) solver.step();
    const double t = solver.time();
    const auto& p = solver.state().particles[0];
    EXPECT_NEAR(p.x[0], 0.3 * t + 0.5 * 2.0 * t * t, 1e-12);
    EXPECT_NEAR(p.x[1], -0.1 * t - 0.5 * 9.81 * t * t, 1e-12);
    EXPECT_NEAR(p.v[1], -0.1 - 9.81 * t, 1e-12);
}

TEST(Integrator, SecondOrderOnHarmonicOscillator) {
    const double omega = 2.0, T = 3.0;
    auto err = [&](int steps) {
        const auto y = harmonic(omega, T, steps);
        return std::hypot(y[0] - std::cos(omega * T), y[1] + omega * std::sin(omega * T));
    };
    const double e1 = err(200), e2 = err(400), e3 = err(800);
    EXPECT_GE(std::log2(e1 / e2), 1.9);
    EXPECT_GE(std::log2(e2 / e3), 1.9);
}

TEST(Integrator, DeterministicReruns) { EXPECT_EQ(checks::check_deterministic_rerun(), ""); }

TEST(Integrator, FixedParticlesDoNotMove) {
    std::mt19937_64 rng(21);
    auto p = checks::random_patch(rng);
    Solver<2> s(p.set, p.mat, p.cfg);
    for (int n = 0; n < 3; ++n) s.step();
    for (std::size_t i = 0; i < p.set.size(); ++i)
        if (p.set.particles[i].fixed()) {
            EXPECT_EQ(s.state().particles[i].x, p.set.particles[i].x);
            EXPECT_EQ(s.state().particles[i].rho, p.set.particles[i].rho);
        }
}

TEST(Integrator, NeighborTableRefreshedEveryStep) {
    std::mt19937_64 rng(22);
    auto p = checks::random_patch(rng);
    Solver<2> s(p.set, p.mat, p.cfg);
    s.step();
    s.step();
    EXPECT_EQ(s.table().stamp, 2u);
    EXPECT_EQ(s.steps(), 2u);
}

TEST(Integrator, NonFiniteStateRaises) {
    SimConfig cfg;
    cfg.dp = 1.0;
    cfg.dt = 1.0;
    cfg.body_force = {1e308, 0.0, 0.0};
    auto set = lone_particle();
    set.particles[0].v[0] = 1e308;
    Solver<2> s(set, MaterialModel::elastic(1.0, 1.0, 0.0), cfg);
    EXPECT_THROW(s.step(), NumericalError);
}

TEST(Integrator, InvalidConfigRejected) {
    SimConfig cfg;
    cfg.dt = 0.0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = {};
    cfg.xsph_eps = 2.0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg = {};
    cfg.adaptive = false;
    cfg.fixed_a = 2.0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
}

TEST(Integrator, CflLimit) {
    SimConfig cfg;
    cfg.dp = 1e-3;
    const auto mat = MaterialModel::elastic(7850.0, 200e9, 0.3);
    EXPECT_NEAR(cfl_limit(cfg, mat), 0.3 * 1.5e-3 / std::sqrt(200e9 / 7850.0), 1e-18);
}

TEST(Integrator, AdaptiveKnotsFollowTension) {
    Stability2dParams prm;
    prm.n_interior = 7;
    const auto sc = build_stability2d(prm);
    Solver<2> s(sc.initial, sc.material, sc.defaults);
    const double expect = 1.1 * std::sqrt(2.0) / 1.5;
    for (const auto& p : s.state().particles) EXPECT_NEAR(p.a_knot, expect, 1e-12);
}
