#pragma once

/**
 * @file particles.hpp
 * @brief Particle state, material model and artificial-viscosity parameters.
 */

#include "asph/types.hpp"

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace asph {

/// Isotropic linear elastic material; K and G follow from (E, nu).
struct MaterialModel {
    double rho0 = 1.0;
    double E = 1.0;
    double nu = 0.0;
    double K = 1.0 / 3.0;
    double G = 0.5;

    static MaterialModel elastic(double rho0, double E, double nu) {
        if (!(rho0 > 0.0) || !(E > 0.0)) throw ArgumentError("material: rho0 and E must be positive");
        if (!(nu >= 0.0 && nu < 0.5)) throw ArgumentError("material: nu must lie in [0, 0.5)");
        return {rho0, E, nu, E / (3.0 * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu))};
    }

    /// Bar wave speed sqrt(E / rho0).
    double wave_speed() const { return std::sqrt(E / rho0); }
};

struct ViscosityParams {
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    double eta = 0.01;

    void validate() const {
        if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0)) throw ArgumentError("viscosity: gamma1, gamma2 must be >= 0");
        if (!(eta > 0.0)) throw ArgumentError("viscosity: eta must be positive");
    }
};

enum class ParticleKind : int { Interior = 0, FixedBoundary = 1 };

inline std::string_view to_string(ParticleKind k) {
    return k == ParticleKind::Interior ? "interior" : "fixed";
}

template <int Dim>
struct Particle {
    Vec<Dim> x{};
    Vec<Dim> v{};
    double rho = 1.0;
    double m = 1.0;
    double e = 0.0;       ///< specific energy
    double a_knot = 1.0;  ///< intermediate knot used by the adaptive kernel
    Mat3 S{};             ///< deviatoric stress (3D, traceless)
    ParticleKind kind = ParticleKind::Interior;

    bool fixed() const { return kind == ParticleKind::FixedBoundary; }
};

/// Particle states plus the step counter of the configuration they describe.
template <int Dim>
struct ParticleSet {
    std::vector<Particle<Dim>> particles;
    std::uint64_t step = 0;

    std::size_t size() const { return particles.size(); }

    std::vector<Vec<Dim>> positions() const {
        std::vector<Vec<Dim>> out;
        out.reserve(particles.size());
        for (const auto& p : particles) out.push_back(p.x);
        return out;
    }
};

}  // namespace asph
