#pragma once

/**
 * @file integrator.hpp
 * @brief Explicit midpoint predictor-corrector and the stepping driver.
 */

#include "asph/adaptivity.hpp"
#include "asph/kernel.hpp"
#include "asph/neighbors.hpp"
#include "asph/particles.hpp"
#include "asph/sph_core.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace asph {

struct SimConfig {
    double dp = 1e-3;     ///< initial particle spacing
    double dt = 1e-7;
    double t_end = 0.0;
    KernelFamily family = KernelFamily::CubicBSpline;
    bool adaptive = true;
    double fixed_a = 1.0;  ///< knot for non-adaptive B-spline runs
    AdaptivityParams adaptivity{};
    ViscosityParams viscosity{};
    double xsph_eps = 0.5;
    int output_every = 100;
    bool deterministic = true;
    double h_factor = 1.5;
    bool renormalize = true;
    bool boundary_knot_from_interior = true;
    bool mirror_boundary_stress = true;
    std::array<double, 3> body_force{};

    double h() const { return h_factor * dp; }
    double b() const { return adaptivity.b; }

    KernelSettings kernel_settings() const {
        KernelSettings k;
        k.family = family;
        k.adaptive = adaptive && family != KernelFamily::StandardCubic;
        k.fixed_a = fixed_a;
        k.b = adaptivity.b;
        k.h = h();
        return k;
    }

    template <int Dim>
    RateOptions<Dim> rate_options() const {
        RateOptions<Dim> o;
        o.kernel = kernel_settings();
        o.viscosity = viscosity;
        o.xsph_eps = xsph_eps;
        o.renormalize = renormalize;
        o.mirror_boundary_stress = mirror_boundary_stress;
        for (int d = 0; d < Dim; ++d) o.body_force[d] = body_force[static_cast<std::size_t>(d)];
        return o;
    }

    void validate() const {
        if (!(dp > 0.0)) throw ArgumentError("config: dp must be positive");
        if (!(dt > 0.0)) throw ArgumentError("config: dt must be positive");
        if (!(t_end >= 0.0)) throw ArgumentError("config: t_end must be non-negative");
        if (output_every < 1) throw ArgumentError("config: output cadence must be >= 1");
        if (!(h_factor > 0.0)) throw ArgumentError("config: h_factor must be positive");
        if (!(xsph_eps >= 0.0 && xsph_eps <= 1.0)) throw ArgumentError("config: xsph_eps must lie in [0, 1]");
        adaptivity.validate();
        viscosity.validate();
        if (family != KernelFamily::StandardCubic && !adaptive && !(fixed_a > 0.0 && fixed_a < adaptivity.b))
            throw ArgumentError("config: fixed knot must satisfy 0 < a < b");
    }
};

/// One midpoint predictor-corrector step for any state type:
/// y* = y + dt/2 f(y), y_next = y + dt f(y*).
template <class State, class RateFn, class AdvanceFn>
State predictor_corrector(const State& y, double dt, RateFn&& rate, AdvanceFn&& advance) {
    const auto k1 = rate(y);
    const State mid = advance(y, k1, 0.5 * dt);
    const auto k2 = rate(mid);
    return advance(y, k2, dt);
}

/// base + dt * rates for interior particles; fixed particles are copied.
template <int Dim>
ParticleSet<Dim> advance(const ParticleSet<Dim>& base, const Rates<Dim>& r, double dt) {
    ParticleSet<Dim> out = base;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& p = out.particles[i];
        if (p.fixed()) continue;
        p.x += r.dx[i] * dt;
        p.v += r.dv[i] * dt;
        p.rho += r.drho[i] * dt;
        p.e += r.de[i] * dt;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) p.S[a][b] += r.dS[i][a][b] * dt;
    }
    return out;
}

/// Time step above which a CFL warning is issued: 0.3 h / sqrt(E / rho0).
inline double cfl_limit(const SimConfig& cfg, const MaterialModel& mat) { return 0.3 * cfg.h() / mat.wave_speed(); }

/// Owns the particle state and advances it with constant time step.
template <int Dim>
class Solver {
public:
    Solver(ParticleSet<Dim> initial, MaterialModel mat, SimConfig cfg)
        : state_(std::move(initial)), mat_(mat), cfg_(cfg), opt_(cfg.rate_options<Dim>()) {
        cfg_.validate();
        if (cfg_.family != KernelFamily::StandardCubic && !cfg_.adaptive)
            for (auto& p : state_.particles) p.a_knot = cfg_.fixed_a;
        if (opt_.kernel.adaptive && cfg_.adaptivity.reference_ring) {
            const auto pos = state_.positions();
            NeighborTable ring = build_neighbor_table<Dim>(pos, opt_.kernel.support_radius(), true);
            fill_immediate_neighbors<Dim>(ring, pos, cfg_.dp, cfg_.adaptivity);
            ring_offsets_ = std::move(ring.immediate_offsets);
            ring_indices_ = std::move(ring.immediate_indices);
        }
        refresh();
    }

    const ParticleSet<Dim>& state() const { return state_; }
    ParticleSet<Dim>& mutable_state() { return state_; }
    const MaterialModel& material() const { return mat_; }
    const SimConfig& config() const { return cfg_; }
    const NeighborTable& table() const { return table_; }
    double time() const { return time_; }
    std::uint64_t steps() const { return state_.step; }
    std::size_t renorm_fallbacks() const { return renorm_fallbacks_; }

    /// Overrides the adaptive knot update (tests use this to pin all knots).
    void set_knot_override(std::optional<double> a) {
        knot_override_ = a;
        refresh();
    }

    /// Rebuilds the neighbor table and per-particle knots for the current positions.
    void refresh() {
        const auto pos = state_.positions();
        table_ = build_neighbor_table<Dim>(pos, opt_.kernel.support_radius(), cfg_.deterministic);
        table_.stamp = state_.step;
        if (opt_.kernel.adaptive) {
            if (cfg_.adaptivity.reference_ring)
                fill_reference_neighbors<Dim>(table_, pos, ring_offsets_, ring_indices_, cfg_.dp);
            else
                fill_immediate_neighbors<Dim>(table_, pos, cfg_.dp, cfg_.adaptivity);
            for (std::size_t i = 0; i < state_.size(); ++i) {
                auto& p = state_.particles[i];
                p.a_knot = knot_override_ ? *knot_override_
                                          : knot_for_particle(p.rho, mat_.rho0, table_.r_d[i], cfg_.h(), cfg_.adaptivity);
            }
            if (cfg_.boundary_knot_from_interior && !knot_override_) inherit_boundary_knots();
        }
    }

    Rates<Dim> rates(const ParticleSet<Dim>& s) {
        auto r = compute_rates<Dim>(s, table_, mat_, opt_);
        renorm_fallbacks_ += r.renorm_fallbacks;
        return r;
    }

    /// Advances one step. Neighbors and knots are refreshed once, at step start.
    void step() {
        if (table_.stamp != state_.step) refresh();
        ParticleSet<Dim> next = predictor_corrector(
            state_, cfg_.dt, [this](const ParticleSet<Dim>& s) { return rates(s); },
            [](const ParticleSet<Dim>& s, const Rates<Dim>& r, double h) { return advance<Dim>(s, r, h); });
        for (std::size_t i = 0; i < next.size(); ++i) {
            const auto& p = next.particles[i];
            if (!all_finite(p.x) || !all_finite(p.v) || !std::isfinite(p.rho) || !std::isfinite(p.e)) {
                std::ostringstream os;
                os << "non-finite state at particle " << i << " after step " << state_.step + 1;
                throw NumericalError(os.str(), i);
            }
            if (!(p.rho > 0.0)) {
                std::ostringstream os;
                os << "non-positive density at particle " << i << " after step " << state_.step + 1;
                throw NumericalError(os.str(), i);
            }
        }
        next.step = state_.step + 1;
        state_ = std::move(next);
        time_ = static_cast<double>(state_.step) * cfg_.dt;
        refresh();
    }

private:
    // Fixed particles never change density, so the knot rule would always see
    // them as unstressed. They take the mean knot of the interior particles
    // within their support instead.
    void inherit_boundary_knots() {
        auto& ps = state_.particles;
        std::vector<double> knots(ps.size());
        for (std::size_t i = 0; i < ps.size(); ++i) knots[i] = ps[i].a_knot;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            if (!ps[i].fixed()) continue;
            double sum = 0.0;
            int count = 0;
            for (std::uint32_t j : table_.neighbors(i))
                if (!ps[j].fixed()) {
                    sum += knots[j];
                    ++count;
                }
            if (count > 0) ps[i].a_knot = sum / count;
        }
    }

    ParticleSet<Dim> state_;
    MaterialModel mat_;
    SimConfig cfg_;
    RateOptions<Dim> opt_;
    NeighborTable table_;
    double time_ = 0.0;
    std::size_t renorm_fallbacks_ = 0;
    std::optional<double> knot_override_;
    std::vector<std::size_t> ring_offsets_;
    std::vector<std::uint32_t> ring_indices_;
};

}  // namespace asph
