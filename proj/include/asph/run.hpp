#pragma once

/**
 * @file run.hpp
 * @brief Time loop over a scenario with per-step diagnostics.
 */

#include "asph/integrator.hpp"
#include "asph/scenarios.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace asph {

/// Diagnostics recorded after every step (and once at t = 0).
struct TimeSample {
    std::uint64_t step = 0;
    double t = 0.0;
    std::vector<double> probes;
    InstabilityReport instability;
    std::array<double, 3> momentum{};
    double energy = 0.0;  ///< sum m (|v|^2 / 2 + e) over interior particles
};

struct RunSummary {
    std::string scenario;
    std::uint64_t steps = 0;
    double t_final = 0.0;
    bool failed = false;
    std::string failure;
    bool cfl_warning = false;
    double min_pair_distance = 0.0;  ///< minimum over the run, in dp
    double max_density_deviation = 0.0;
    double max_probe_magnitude = 0.0;
    std::optional<double> first_clumping_time;  ///< min pair distance below the clumping threshold
    std::optional<double> first_fracture_time;
    std::array<double, 2> clumping_location{};
    double momentum_drift = 0.0;  ///< max |P(t) - P(0)|
    double energy_drift = 0.0;    ///< max |E(t) - E(0)| / |E(0)|
    std::optional<double> measured_period;
    std::size_t renorm_fallbacks = 0;
    double wall_seconds = 0.0;
};

struct RunResult {
    RunSummary summary;
    std::vector<TimeSample> series;
};

/// Hooks invoked by `run`. The default implementation does nothing.
template <int Dim>
struct RunObserver {
    virtual ~RunObserver() = default;
    virtual void on_start(const Scenario<Dim>&, const SimConfig&) {}
    virtual void on_sample(const TimeSample&) {}
    virtual void on_snapshot(const ParticleSet<Dim>&, const MaterialModel&, double /*t*/) {}
    virtual void on_finish(const RunSummary&) {}
};

struct RunControl {
    double clumping_threshold = 0.6;  ///< in dp
    bool keep_series = true;
    /// Stops the run early once it returns true.
    std::function<bool(const TimeSample&)> stop_when;
    /// Test hook: pins every knot to this value.
    std::optional<double> knot_override;
};

template <int Dim>
TimeSample sample_state(const Solver<Dim>& solver, const Scenario<Dim>& sc, const InstabilityMonitor<Dim>& monitor) {
    const auto& s = solver.state();
    TimeSample ts;
    ts.step = s.step;
    ts.t = solver.time();
    for (std::size_t k = 0; k < sc.probes.size(); ++k) ts.probes.push_back(sc.probe_value(s, k));
    ts.instability = monitor.measure(s.particles, solver.material().rho0, &solver.table());
    for (const auto& p : s.particles) {
        for (int d = 0; d < Dim; ++d) ts.momentum[static_cast<std::size_t>(d)] += p.m * p.v[d];
        if (!p.fixed()) ts.energy += p.m * (0.5 * dot(p.v, p.v) + p.e);
    }
    return ts;
}

/// Runs `sc` with `cfg` until t_end. Step failures are caught and reported in
/// the summary (`failed`, `failure`); the partial series is kept.
template <int Dim>
RunResult run(const Scenario<Dim>& sc, const SimConfig& cfg, RunObserver<Dim>* obs = nullptr, const RunControl& ctl = {}) {
    const auto wall0 = std::chrono::steady_clock::now();
    RunResult res;
    RunSummary& sum = res.summary;
    sum.scenario = sc.name;
    sum.cfl_warning = cfg.dt > cfl_limit(cfg, sc.material);

    Solver<Dim> solver(sc.initial, sc.material, cfg);
    if (ctl.knot_override) solver.set_knot_override(ctl.knot_override);
    const InstabilityMonitor<Dim> monitor(sc.initial.positions(), cfg.dp);
    if (obs) obs->on_start(sc, cfg);

    const auto n_steps = static_cast<std::uint64_t>(std::llround(cfg.t_end / cfg.dt));
    TimeSample first;
    auto record = [&](const TimeSample& ts) {
        if (ts.step == 0) {
            first = ts;
            sum.min_pair_distance = ts.instability.min_pair_distance;
        }
        sum.min_pair_distance = std::min(sum.min_pair_distance, ts.instability.min_pair_distance);
        sum.max_density_deviation = std::max(sum.max_density_deviation, ts.instability.max_density_deviation);
        if (!ts.probes.empty()) sum.max_probe_magnitude = std::max(sum.max_probe_magnitude, std::abs(ts.probes[0]));
        if (!sum.first_clumping_time && ts.instability.min_pair_distance < ctl.clumping_threshold) {
            sum.first_clumping_time = ts.t;
            sum.clumping_location = ts.instability.min_pair_location;
        }
        if (!sum.first_fracture_time && ts.instability.fractured) sum.first_fracture_time = ts.t;
        double dp2 = 0.0;
        for (std::size_t d = 0; d < 3; ++d) dp2 += (ts.momentum[d] - first.momentum[d]) * (ts.momentum[d] - first.momentum[d]);
        sum.momentum_drift = std::max(sum.momentum_drift, std::sqrt(dp2));
        if (first.energy != 0.0)
            sum.energy_drift = std::max(sum.energy_drift, std::abs(ts.energy - first.energy) / std::abs(first.energy));
        if (obs) obs->on_sample(ts);
        if (ctl.keep_series) res.series.push_back(ts);
    };

    record(sample_state(solver, sc, monitor));
    if (obs) obs->on_snapshot(solver.state(), sc.material, 0.0);
    try {
        for (std::uint64_t n = 0; n < n_steps; ++n) {
            solver.step();
            const TimeSample ts = sample_state(solver, sc, monitor);
            record(ts);
            const bool last = n + 1 == n_steps;
            if (obs && (solver.steps() % static_cast<std::uint64_t>(cfg.output_every) == 0 || last))
                obs->on_snapshot(solver.state(), sc.material, solver.time());
            if (ctl.stop_when && ctl.stop_when(ts)) break;
        }
    } catch (const NumericalError& e) {
        sum.failed = true;
        sum.failure = e.what();
    }
    sum.steps = solver.steps();
    sum.t_final = solver.time();
    sum.renorm_fallbacks = solver.renorm_fallbacks();
    if (sc.theoretical_period && res.series.size() > 2) {
        std::vector<double> t, y;
        for (const auto& ts : res.series) {
            t.push_back(ts.t);
            y.push_back(ts.probes.at(0));
        }
        try {
            sum.measured_period = measure_period(t, y);
        } catch (const InsufficientData&) {
        }
    }
    sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    if (obs) obs->on_finish(sum);
    return res;
}

}  // namespace asph
