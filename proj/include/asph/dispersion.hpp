#pragma once

/**
 * @file dispersion.hpp
 * @brief Closed-form 1D dispersion relation of the parametrized cubic kernel
 *        and the map of stable intermediate knots.
 *
 * For a uniform 1D lattice with spacing dp, density rho_bar and pressure
 * sigma_bar = K (rho_bar / rho0 - 1), plane-wave perturbations obey
 *
 *   omega^2 = (2 sigma_bar / rho_bar) dp sum_j [1 - cos(k r_j)] W''(r_j)
 *           + (K / rho_bar) (2 - rho_bar / rho0) { sum_j dp sin(k r_j) W'(r_j) }^2
 *
 * summed over lattice neighbors r_j = +-dp, +-2dp, ... inside the support.
 * omega^2 < 0 for some k marks an unstable (clumping) mode.
 */

#include "asph/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace asph {

struct DispersionSetup {
    double dp = 1.0;
    double h = 1.5;
    double a = 1.0;
    double b = 2.0;
    double rho_ratio = 1.0;  ///< rho_bar / rho0
    double K = 1.0;
    double rho_bar = 1.0;

    double rho0() const { return rho_bar / rho_ratio; }
    double sigma_bar() const { return K * (rho_ratio - 1.0); }

    /// Number of lattice neighbors on each side strictly inside b*h.
    int neighbor_extent() const {
        const double reach = b * h / dp;
        return static_cast<int>(std::floor(reach * (1.0 - 1e-12)));
    }

    KernelSpec kernel() const { return {KernelFamily::CubicBSpline, a, b, h, 1}; }

    void validate() const {
        if (!(dp > 0.0 && h > 0.0 && rho_ratio > 0.0 && rho_bar > 0.0 && K > 0.0))
            throw ArgumentError("dispersion: dp, h, rho_ratio, rho_bar, K must be positive");
        kernel().validate();
    }
};

/// Lattice sums entering omega^2 at wave number k.
struct DispersionSums {
    double cos_term = 0.0;  ///< sum_j [1 - cos(k r_j)] W''(r_j)
    double sin_term = 0.0;  ///< sum_j dp sin(k r_j) W'(r_j)
};

inline DispersionSums dispersion_sums(double k, const DispersionSetup& s) {
    const KernelSpec spec = s.kernel();
    const double alpha = normalization_constant(spec);
    DispersionSums out;
    const int extent = s.neighbor_extent();
    for (int n = 1; n <= extent; ++n) {
        const double r = n * s.dp;
        const double q = r / s.h;
        const double d1 = alpha * shape::d1(spec.family, s.a, s.b, q) / s.h;
        const double d2 = alpha * shape::d2(spec.family, s.a, s.b, q) / (s.h * s.h);
        for (int sign : {1, -1}) {
            const double rj = sign * r;
            out.cos_term += (1.0 - std::cos(k * rj)) * d2;
            // W'(r) is odd in r.
            out.sin_term += s.dp * std::sin(k * rj) * sign * d1;
        }
    }
    return out;
}

inline double omega_squared(double k, const DispersionSetup& s) {
    if (!(k >= 0.0)) throw ArgumentError("omega_squared: k must be non-negative");
    s.validate();
    const DispersionSums sums = dispersion_sums(k, s);
    return 2.0 * s.sigma_bar() / s.rho_bar * s.dp * sums.cos_term +
           s.K / s.rho_bar * (2.0 - s.rho_ratio) * sums.sin_term * sums.sin_term;
}

/// Stable if min_k omega^2 >= -1e-12 max_k |omega^2| over k in (0, pi/dp].
inline bool is_stable(const DispersionSetup& s, int k_samples = 400) {
    double lo = 0.0, scale = 0.0;
    for (int i = 1; i <= k_samples; ++i) {
        const double k = std::numbers::pi / s.dp * i / k_samples;
        const double w2 = omega_squared(k, s);
        lo = std::min(lo, w2);
        scale = std::max(scale, std::abs(w2));
    }
    return lo >= -1e-12 * scale;
}

struct KnotInterval {
    double a_min;
    double a_max;
};

struct StableBand {
    double rho_ratio;
    std::vector<KnotInterval> intervals;  ///< empty when no knot on the grid is stable

    bool contains(double a) const {
        return std::any_of(intervals.begin(), intervals.end(),
                           [a](const KnotInterval& iv) { return iv.a_min <= a && a <= iv.a_max; });
    }
};

/// Stable knot intervals for every density ratio, scanning the a grid.
inline std::vector<StableBand> stable_knot_range(const std::vector<double>& rho_ratios, const std::vector<double>& a_grid,
                                                 DispersionSetup base, int k_samples = 400) {
    std::vector<StableBand> out;
    for (double ratio : rho_ratios) {
        StableBand band{ratio, {}};
        bool open = false;
        for (double a : a_grid) {
            DispersionSetup s = base;
            s.rho_ratio = ratio;
            s.a = a;
            const bool ok = a > 0.0 && a < s.b && is_stable(s, k_samples);
            if (ok && !open) {
                band.intervals.push_back({a, a});
                open = true;
            } else if (ok) {
                band.intervals.back().a_max = a;
            } else {
                open = false;
            }
        }
        out.push_back(std::move(band));
    }
    return out;
}

}  // namespace asph
