#pragma once

/**
 * @file scenarios.hpp
 * @brief Benchmark set-ups, analytic reference solutions and instability metrics.
 *
 * All benchmarks are seeded on a square lattice in 2D (plane strain, unit
 * thickness). Clamped supports are a layer of fixed particles b*h deep.
 */

#include "asph/integrator.hpp"
#include "asph/neighbors.hpp"
#include "asph/particles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace asph {

/// Mean displacement of a group of particles along one axis.
struct Probe {
    std::string name;
    std::vector<std::size_t> indices;
    int component = 0;
};

template <int Dim>
struct Scenario {
    std::string name;
    ParticleSet<Dim> initial;
    MaterialModel material;
    SimConfig defaults;  ///< parameters the benchmark is run with unless overridden
    std::vector<Probe> probes;
    /// Analytic displacement of probes[0] versus time, when one exists.
    std::function<double(double)> oracle;
    /// Expected oscillation period of probes[0], when one exists.
    std::optional<double> theoretical_period;
    /// Momentum magnitude of one colliding body (ring collision only).
    double reference_momentum = 0.0;

    double probe_value(const ParticleSet<Dim>& s, std::size_t k) const {
        const Probe& pr = probes.at(k);
        double sum = 0.0;
        for (std::size_t i : pr.indices) sum += s.particles[i].x[pr.component] - initial.particles[i].x[pr.component];
        return pr.indices.empty() ? 0.0 : sum / static_cast<double>(pr.indices.size());
    }
};

/// Number of fixed layers needed to fill the kernel support at a clamp.
inline int boundary_layers(const SimConfig& cfg) {
    return static_cast<int>(std::ceil(cfg.b() * cfg.h_factor - 1e-9));
}

namespace detail {

inline Particle<2> lattice_particle(double x, double y, const MaterialModel& mat, double dp, ParticleKind kind) {
    Particle<2> p;
    p.x = Vec<2>{{x, y}};
    p.rho = mat.rho0;
    p.m = mat.rho0 * dp * dp;
    p.kind = kind;
    return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 2D stability patch
// ---------------------------------------------------------------------------

struct Stability2dParams {
    double dp = 1e-3;
    int n_interior = 21;
    double rho_ratio = 0.96;       ///< uniform pre-stress through the initial density
    double perturb_speed = 1e-7;   ///< speed given to the central particle
};

/// Square patch of steel with a fixed ring, uniformly pre-stressed, centre particle perturbed.
inline Scenario<2> build_stability2d(const Stability2dParams& prm = {}) {
    if (!(prm.dp > 0.0) || prm.n_interior < 1) throw ArgumentError("stability2d: invalid parameters");
    Scenario<2> sc;
    sc.name = "stability2d";
    sc.material = MaterialModel::elastic(7850.0, 200e9, 0.3);
    sc.defaults.dp = prm.dp;
    sc.defaults.dt = 5e-8 * prm.dp / 1e-3;
    sc.defaults.t_end = 1e-3;
    sc.defaults.viscosity.gamma1 = 0.0;
    sc.defaults.viscosity.gamma2 = 0.0;
    const int layers = boundary_layers(sc.defaults);
    const int n = prm.n_interior;
    const int centre = n / 2;
    std::size_t centre_index = 0;
    for (int j = -layers; j < n + layers; ++j)
        for (int i = -layers; i < n + layers; ++i) {
            const bool inside = i >= 0 && i < n && j >= 0 && j < n;
            auto p = detail::lattice_particle(i * prm.dp, j * prm.dp, sc.material, prm.dp,
                                              inside ? ParticleKind::Interior : ParticleKind::FixedBoundary);
            p.rho = prm.rho_ratio * sc.material.rho0;
            if (i == centre && j == centre) {
                p.v[0] = prm.perturb_speed;
                centre_index = sc.initial.particles.size();
            }
            sc.initial.particles.push_back(p);
        }
    sc.probes.push_back({"centre_ux", {centre_index}, 0});
    return sc;
}

// ---------------------------------------------------------------------------
// Bar under uniform axial velocity
// ---------------------------------------------------------------------------

struct BarParams {
    double dp = 5e-4;
    double length = 0.2;
    double depth = 0.01;
    double speed = 1.0;  ///< initial speed, directed toward the support
};

/// Longitudinal displacement of a clamped-free bar released with uniform velocity v0.
///
/// x is measured from the free end (x = L is the clamp); the positive
/// direction is that of the initial velocity. Truncated after n_terms.
inline double bar_analytic_displacement(double x, double t, double v0, double L, double c, int n_terms) {
    if (n_terms < 1) throw ArgumentError("bar_analytic_displacement: n_terms must be >= 1");
    double u = 0.0;
    for (int k = 1; k <= n_terms; ++k) {
        const double m = 2.0 * k - 1.0;
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        u += 8.0 * sign * v0 * L / (std::numbers::pi * std::numbers::pi * m * m * c) *
             std::sin(m * c * std::numbers::pi * t / (2.0 * L)) * std::cos(m * std::numbers::pi * x / (2.0 * L));
    }
    return u;
}

inline Scenario<2> build_bar(const BarParams& prm = {}) {
    if (!(prm.dp > 0.0 && prm.length > 0.0 && prm.depth > 0.0)) throw ArgumentError("bar: invalid parameters");
    Scenario<2> sc;
    sc.name = "bar";
    sc.material = MaterialModel::elastic(2000.0, 10e6, 0.0);
    sc.defaults.dp = prm.dp;
    sc.defaults.dt = 2e-6;
    sc.defaults.t_end = 12e-3;
    sc.defaults.viscosity.gamma1 = 1.0;
    sc.defaults.viscosity.gamma2 = 1.0;
    const int layers = boundary_layers(sc.defaults);
    const int nx = static_cast<int>(std::lround(prm.length / prm.dp));
    const int ny = static_cast<int>(std::lround(prm.depth / prm.dp));
    Probe tip{"tip_ux", {}, 0};
    for (int j = 0; j < ny; ++j)
        for (int i = -layers; i < nx; ++i) {
            const bool fixed = i < 0;
            auto p = detail::lattice_particle((i + 0.5) * prm.dp, (j + 0.5) * prm.dp, sc.material, prm.dp,
                                              fixed ? ParticleKind::FixedBoundary : ParticleKind::Interior);
            if (!fixed) p.v[0] = -prm.speed;
            if (i == nx - 1) tip.indices.push_back(sc.initial.particles.size());
            sc.initial.particles.push_back(p);
        }
    sc.probes.push_back(tip);
    const double L = prm.length, c = sc.material.wave_speed(), v0 = prm.speed;
    const double x_from_free_end = 0.5 * prm.dp;
    sc.oracle = [=](double t) { return -bar_analytic_displacement(x_from_free_end, t, v0, L, c, 200); };
    sc.theoretical_period = 4.0 * L / c;
    return sc;
}

// ---------------------------------------------------------------------------
// Cantilever plate in its first bending mode
// ---------------------------------------------------------------------------

struct PlateParams {
    double dp = 5e-4;
    double length = 0.2;
    double thickness = 0.02;
    double tip_velocity = 0.02;  ///< V_f; the tip speed is V_f times sqrt(E / rho0)
};

inline constexpr double plate_first_mode_kl = 1.875;

/// First-mode shape (M[cos kx - cosh kx] - N[sin kx - sinh kx]) / Q, equal to 1 at the free end.
inline double plate_mode_shape(double x, double L) {
    const double kl = plate_first_mode_kl, k = kl / L;
    const double M = std::sin(kl) + std::sinh(kl);
    const double N = std::cos(kl) + std::cosh(kl);
    const double Q = 2.0 * (std::cos(kl) * std::sinh(kl) - std::sin(kl) * std::cosh(kl));
    return (M * (std::cos(k * x) - std::cosh(k * x)) - N * (std::sin(k * x) - std::sinh(k * x))) / Q;
}

/// Initial transverse velocity v_y(x) = c V_f mode(x).
inline double plate_initial_velocity(double x, double L, double tip_velocity, const MaterialModel& mat) {
    return mat.wave_speed() * tip_velocity * plate_mode_shape(x, L);
}

/// T = 2 pi / omega with omega^2 = E B^2 k^4 / (12 rho (1 - nu^2)), first mode.
inline double plate_theoretical_period(double L, double B, const MaterialModel& mat) {
    const double k = plate_first_mode_kl / L;
    const double omega2 = mat.E * B * B * std::pow(k, 4) / (12.0 * mat.rho0 * (1.0 - mat.nu * mat.nu));
    return 2.0 * std::numbers::pi / std::sqrt(omega2);
}

inline Scenario<2> build_plate(const PlateParams& prm = {}) {
    if (!(prm.dp > 0.0 && prm.length > 0.0 && prm.thickness > 0.0)) throw ArgumentError("plate: invalid parameters");
    Scenario<2> sc;
    sc.name = "plate";
    sc.material = MaterialModel::elastic(7850.0, 210e9, 0.3);
    sc.defaults.dp = prm.dp;
    sc.defaults.dt = 5e-8;
    sc.defaults.t_end = 2.0 * plate_theoretical_period(prm.length, prm.thickness, sc.material) * 1.2;
    sc.defaults.viscosity.gamma1 = 1.0;
    sc.defaults.viscosity.gamma2 = 1.0;
    const int layers = boundary_layers(sc.defaults);
    const int nx = static_cast<int>(std::lround(prm.length / prm.dp));
    const int ny = static_cast<int>(std::lround(prm.thickness / prm.dp));
    Probe tip{"tip_uy", {}, 1};
    for (int j = 0; j < ny; ++j)
        for (int i = -layers; i < nx; ++i) {
            const bool fixed = i < 0;
            const double x = (i + 0.5) * prm.dp;
            auto p = detail::lattice_particle(x, (j + 0.5) * prm.dp - 0.5 * prm.thickness, sc.material, prm.dp,
                                              fixed ? ParticleKind::FixedBoundary : ParticleKind::Interior);
            if (!fixed) p.v[1] = plate_initial_velocity(x, prm.length, prm.tip_velocity, sc.material);
            if (i == nx - 1) tip.indices.push_back(sc.initial.particles.size());
            sc.initial.particles.push_back(p);
        }
    sc.probes.push_back(tip);
    sc.theoretical_period = plate_theoretical_period(prm.length, prm.thickness, sc.material);
    return sc;
}

// ---------------------------------------------------------------------------
// Collision of two rubber rings
// ---------------------------------------------------------------------------

struct RingParams {
    double dp = 5e-4;
    double inner_radius = 0.015;
    double outer_radius = 0.02;
    double closing_speed = 50.0;
    double gap_factor = 2.0;  ///< gap between the facing outermost particles, in dp
};

inline Scenario<2> build_ring_collision(const RingParams& prm = {}) {
    if (!(prm.dp > 0.0 && prm.inner_radius >= 0.0 && prm.outer_radius > prm.inner_radius))
        throw ArgumentError("rings: invalid parameters");
    Scenario<2> sc;
    sc.name = "rings";
    sc.material = MaterialModel::elastic(1010.0, 0.73e9, 0.4);
    sc.defaults.dp = prm.dp;
    sc.defaults.dt = 2.5e-8 * prm.dp / 5e-4;
    sc.defaults.t_end = 1e-3;
    sc.defaults.viscosity.gamma1 = 1.0;
    sc.defaults.viscosity.gamma2 = 1.0;

    // Lattice offsets around each centre; the right ring mirrors the left one.
    const int reach = static_cast<int>(std::floor(prm.outer_radius / prm.dp + 1e-9));
    std::vector<std::pair<int, int>> offsets;
    for (int j = -reach; j <= reach; ++j)
        for (int i = -reach; i <= reach; ++i) {
            const double r = prm.dp * std::hypot(i, j);
            if (r >= prm.inner_radius - 1e-12 && r <= prm.outer_radius + 1e-12) offsets.emplace_back(i, j);
        }
    const double centre = reach * prm.dp + 0.5 * prm.gap_factor * prm.dp;
    const double half_speed = 0.5 * prm.closing_speed;
    Probe left{"left_ux", {}, 0}, right{"right_ux", {}, 0};
    for (int side : {-1, 1}) {
        for (auto [i, j] : offsets) {
            auto p = detail::lattice_particle(side * centre + side * i * prm.dp, j * prm.dp, sc.material, prm.dp,
                                              ParticleKind::Interior);
            p.v[0] = -side * half_speed;
            (side < 0 ? left : right).indices.push_back(sc.initial.particles.size());
            sc.initial.particles.push_back(p);
        }
    }
    sc.probes = {left, right};
    sc.reference_momentum = static_cast<double>(offsets.size()) * sc.material.rho0 * prm.dp * prm.dp * half_speed;
    return sc;
}

// ---------------------------------------------------------------------------
// Period measurement and instability metrics
// ---------------------------------------------------------------------------

/// Mean period from successive same-direction zero crossings (linear interpolation).
inline double measure_period(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size()) throw ArgumentError("measure_period: size mismatch");
    std::vector<double> up, down;
    for (std::size_t i = 1; i < y.size(); ++i) {
        const double y0 = y[i - 1], y1 = y[i];
        const bool rising = y0 <= 0.0 && y1 > 0.0;
        const bool falling = y0 >= 0.0 && y1 < 0.0;
        if (!rising && !falling) continue;
        const double tc = t[i - 1] + (0.0 - y0) / (y1 - y0) * (t[i] - t[i - 1]);
        (rising ? up : down).push_back(tc);
    }
    double sum = 0.0;
    int cycles = 0;
    for (const auto* list : {&up, &down})
        for (std::size_t i = 1; i < list->size(); ++i) {
            sum += (*list)[i] - (*list)[i - 1];
            ++cycles;
        }
    if (cycles == 0) throw InsufficientData("measure_period: fewer than two same-direction zero crossings");
    return sum / cycles;
}

struct InstabilityReport {
    double min_pair_distance = 0.0;  ///< in units of dp, capped at the search radius
    double max_density_deviation = 0.0;
    double max_displacement = 0.0;   ///< since t = 0 (m)
    bool fractured = false;
    std::size_t broken_bonds = 0;
    std::array<double, 2> min_pair_location{};  ///< midpoint of the closest pair (first two coordinates)
};

/// Tracks clumping and bond stretch relative to the initial configuration.
///
/// A bond is any pair initially within bond_factor * dp; it is broken once
/// stretched beyond stretch_factor * dp. Minimum pair distances are searched
/// within 1.5 dp and reported capped at 1.5.
template <int Dim>
class InstabilityMonitor {
public:
    static constexpr double search_factor = 1.5;

    InstabilityMonitor(std::vector<Vec<Dim>> initial, double dp, double bond_factor = 1.1, double stretch_factor = 2.0)
        : initial_(std::move(initial)), dp_(dp), stretch_(stretch_factor * dp) {
        const auto t = build_neighbor_table<Dim>(initial_, bond_factor * dp * (1.0 + 1e-9));
        for (std::size_t i = 0; i < t.size(); ++i)
            for (std::uint32_t j : t.neighbors(i))
                if (j > i) bonds_.emplace_back(static_cast<std::uint32_t>(i), j);
    }

    std::size_t bond_count() const { return bonds_.size(); }

    InstabilityReport measure(const std::vector<Particle<Dim>>& ps, double rho0, const NeighborTable* table = nullptr) const {
        if (ps.size() != initial_.size()) throw ArgumentError("instability metrics: particle count changed");
        InstabilityReport rep;
        std::vector<Vec<Dim>> pos(ps.size());
        for (std::size_t i = 0; i < ps.size(); ++i) {
            pos[i] = ps[i].x;
            rep.max_density_deviation = std::max(rep.max_density_deviation, std::abs(ps[i].rho / rho0 - 1.0));
            rep.max_displacement = std::max(rep.max_displacement, norm(ps[i].x - initial_[i]));
        }
        NeighborTable local;
        if (table == nullptr || table->size() != ps.size() || table->radius < search_factor * dp_) {
            local = build_neighbor_table<Dim>(pos, search_factor * dp_);
            table = &local;
        }
        double best = search_factor * dp_;
        for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::uint32_t j : table->neighbors(i)) {
                if (j <= i) continue;
                const double r = norm(pos[i] - pos[j]);
                if (r < best) {
                    best = r;
                    for (int d = 0; d < std::min(Dim, 2); ++d) rep.min_pair_location[static_cast<std::size_t>(d)] = 0.5 * (pos[i][d] + pos[j][d]);
                }
            }
        rep.min_pair_distance = best / dp_;
        for (auto [i, j] : bonds_)
            if (norm(pos[i] - pos[j]) > stretch_) ++rep.broken_bonds;
        rep.fractured = rep.broken_bonds > 0;
        return rep;
    }

private:
    std::vector<Vec<Dim>> initial_;
    double dp_;
    double stretch_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> bonds_;
};

/// Convenience form for a single snapshot against its initial positions.
template <int Dim>
InstabilityReport instability_metrics(const std::vector<Vec<Dim>>& initial, const std::vector<Particle<Dim>>& current,
                                      double dp, double rho0) {
    if (current.size() < 2) throw ArgumentError("instability metrics: need at least two particles");
    return InstabilityMonitor<Dim>(initial, dp).measure(current, rho0);
}

}  // namespace asph
