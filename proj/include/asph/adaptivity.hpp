#pragma once

/**
 * @file adaptivity.hpp
 * @brief Stress-driven choice of the intermediate knot.
 *
 * Each particle picks its own knot a_i from its density ratio: under tension
 * the knot moves outward so that the immediate neighbors sit on the rising
 * (stable) side of |W'|, under compression it moves toward the particle.
 * Interacting pairs use the mean knot so the pair kernel stays symmetric.
 */

#include "asph/neighbors.hpp"
#include "asph/types.hpp"

#include <algorithm>
#include <span>
#include <vector>

namespace asph {

struct AdaptivityParams {
    double b = 2.0;
    double tension_factor = 1.1;
    double compression_a = 0.2;
    double knot_floor = 0.05;
    double knot_ceiling = 1.95;
    double immediate_radius_factor = 1.5;  ///< in units of the particle spacing
    /// Keep the immediate neighbors found in the initial configuration and
    /// measure r_d to them, instead of searching the current radius.
    bool reference_ring = true;

    void validate() const {
        if (!(0.0 < knot_floor && knot_floor < knot_ceiling && knot_ceiling < b))
            throw ArgumentError("adaptivity: require 0 < knot_floor < knot_ceiling < b");
        if (!(tension_factor > 0.0) || !(immediate_radius_factor > 0.0))
            throw ArgumentError("adaptivity: factors must be positive");
    }
};

struct ImmediateNeighbors {
    std::vector<std::uint32_t> indices;
    double r_d = 0.0;
};

/// First ring of neighbors of particle i (|x_ij| <= factor * dp) and its largest distance.
/// An isolated particle falls back to r_d = dp.
template <int Dim>
ImmediateNeighbors immediate_neighbors(std::size_t i, std::span<const Vec<Dim>> positions, const NeighborTable& table,
                                       double dp, const AdaptivityParams& params = {}) {
    ImmediateNeighbors out;
    const double limit = params.immediate_radius_factor * dp;
    for (std::uint32_t j : table.neighbors(i)) {
        const double r = norm(positions[i] - positions[j]);
        if (r <= limit) {
            out.indices.push_back(j);
            out.r_d = std::max(out.r_d, r);
        }
    }
    if (out.indices.empty()) out.r_d = dp;
    return out;
}

/// Fills the immediate-neighbor sublists and r_d of every particle into `table`.
template <int Dim>
void fill_immediate_neighbors(NeighborTable& table, std::span<const Vec<Dim>> positions, double dp,
                              const AdaptivityParams& params = {}) {
    const std::size_t n = table.size();
    table.immediate_offsets.assign(n + 1, 0);
    table.immediate_indices.clear();
    table.r_d.assign(n, dp);
    for (std::size_t i = 0; i < n; ++i) {
        auto imm = immediate_neighbors<Dim>(i, positions, table, dp, params);
        table.immediate_indices.insert(table.immediate_indices.end(), imm.indices.begin(), imm.indices.end());
        table.immediate_offsets[i + 1] = table.immediate_indices.size();
        table.r_d[i] = imm.r_d;
    }
}

/// Immediate neighbors in `ring` (fixed lists, e.g. from the initial lattice);
/// r_d is the largest current distance to them.
template <int Dim>
void fill_reference_neighbors(NeighborTable& table, std::span<const Vec<Dim>> positions,
                              const std::vector<std::size_t>& ring_offsets,
                              const std::vector<std::uint32_t>& ring_indices, double dp) {
    const std::size_t n = table.size();
    if (ring_offsets.size() != n + 1) throw ArgumentError("fill_reference_neighbors: ring does not match particle count");
    table.immediate_offsets = ring_offsets;
    table.immediate_indices = ring_indices;
    table.r_d.assign(n, dp);
    for (std::size_t i = 0; i < n; ++i) {
        double r_d = 0.0;
        for (std::size_t k = ring_offsets[i]; k < ring_offsets[i + 1]; ++k)
            r_d = std::max(r_d, norm(positions[i] - positions[ring_indices[k]]));
        if (ring_offsets[i + 1] > ring_offsets[i]) table.r_d[i] = r_d;
    }
}

/// a_i = tension_factor * r_d / h under tension (rho < rho0), compression_a otherwise,
/// clamped to [knot_floor, knot_ceiling].
inline double knot_for_particle(double rho, double rho0, double r_d, double h, const AdaptivityParams& params = {}) {
    if (!(rho > 0.0) || !(rho0 > 0.0) || !(h > 0.0)) throw ArgumentError("knot_for_particle: rho, rho0, h must be positive");
    const double raw = rho / rho0 < 1.0 ? params.tension_factor * r_d / h : params.compression_a;
    return std::clamp(raw, params.knot_floor, params.knot_ceiling);
}

inline double pair_knot(double a_i, double a_j) { return 0.5 * (a_i + a_j); }

/// Immediate-neighbor stability test for the cubic B-spline kernel.
inline bool stability_condition_cubic(double chi, double dp_over_h, double b, bool in_tension) {
    if (!(b > dp_over_h)) throw ArgumentError("stability_condition_cubic: requires b > dp/h");
    const double threshold = dp_over_h / (b - dp_over_h);
    return in_tension ? chi > threshold : chi < threshold;
}

/// Immediate-neighbor stability test for the quadratic B-spline kernel.
inline bool stability_condition_quadratic(double chi, double dp_over_h, double b, bool in_tension) {
    const double threshold = dp_over_h / b;
    return in_tension ? chi > threshold : chi < threshold;
}

}  // namespace asph
