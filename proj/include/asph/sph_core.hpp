#pragma once

/**
 * @file sph_core.hpp
 * @brief Discretized continuity, momentum, energy and deviatoric-stress equations.
 *
 * Gradients are corrected per particle with the renormalization matrix
 * B_i = (-sum_j V_j x_ij (x) grad W_ij)^-1 so that gradients of linear fields
 * are reproduced exactly. XSPH uses the uncorrected kernel value.
 */

#include "asph/adaptivity.hpp"
#include "asph/kernel.hpp"
#include "asph/neighbors.hpp"
#include "asph/particles.hpp"
#include "asph/types.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace asph {

/// Kernel choice for pair interactions.
struct KernelSettings {
    KernelFamily family = KernelFamily::CubicBSpline;
    bool adaptive = true;  ///< per-particle knots averaged per pair
    double fixed_a = 1.0;  ///< knot used when not adaptive
    double b = 2.0;
    double h = 1.0;

    double pair_a(double a_i, double a_j) const { return adaptive ? pair_knot(a_i, a_j) : fixed_a; }
    double support_radius() const { return (family == KernelFamily::StandardCubic ? 2.0 : b) * h; }
};

template <int Dim>
struct RateOptions {
    KernelSettings kernel;
    ViscosityParams viscosity;
    double xsph_eps = 0.5;
    bool renormalize = true;
    bool mirror_boundary_stress = true;  ///< fixed particles carry the Shepard average of interior rho and S
    Vec<Dim> body_force{};  ///< constant acceleration added to every interior particle
};

template <int Dim>
struct Rates {
    std::vector<double> drho;
    std::vector<Vec<Dim>> dv;
    std::vector<double> de;
    std::vector<Mat3> dS;
    std::vector<Vec<Dim>> dx;
    std::size_t renorm_fallbacks = 0;

    explicit Rates(std::size_t n = 0) : drho(n, 0.0), dv(n), de(n, 0.0), dS(n, Mat3{}), dx(n) {}
    std::size_t size() const { return drho.size(); }
};

/// Equation of state p = K (rho / rho0 - 1).
inline double pressure(double rho, const MaterialModel& mat) { return mat.K * (rho / mat.rho0 - 1.0); }

/// In-plane Cauchy stress sigma = -p I + S.
template <int Dim>
Mat<Dim> cauchy_stress(double p, const Mat3& S) {
    Mat<Dim> sigma{};
    for (int a = 0; a < Dim; ++a)
        for (int b = 0; b < Dim; ++b) sigma[a][b] = S[a][b] - (a == b ? p : 0.0);
    return sigma;
}

/// Pairwise artificial viscosity, non-zero only for approaching pairs.
template <int Dim>
double artificial_viscosity(const Particle<Dim>& pi, const Particle<Dim>& pj, const MaterialModel& mat,
                            const ViscosityParams& visc, double h) {
    const Vec<Dim> x_ij = pi.x - pj.x;
    const Vec<Dim> v_ij = pi.v - pj.v;
    const double vx = dot(v_ij, x_ij);
    if (!(vx < 0.0)) return 0.0;
    const double mu = h * vx / (dot(x_ij, x_ij) + visc.eta * h * h);
    const double c_bar = 0.5 * (std::sqrt(mat.E / pi.rho) + std::sqrt(mat.E / pj.rho));
    const double rho_bar = 0.5 * (pi.rho + pj.rho);
    return (-visc.gamma1 * c_bar * mu + visc.gamma2 * mu * mu) / (rho_bar * rho_bar);
}

template <int Dim>
struct Renormalization {
    Mat<Dim> B = identity<Dim>();
    bool fallback = false;
};

namespace detail {

inline constexpr double renorm_max_condition = 1e8;

template <int Dim>
Renormalization<Dim> invert_renormalization(const Mat<Dim>& moment, std::size_t neighbor_count) {
    Renormalization<Dim> out;
    if (neighbor_count < static_cast<std::size_t>(Dim)) {
        out.fallback = true;
        return out;
    }
    Mat<Dim> inv{};
    if (!invert<Dim>(moment, inv) || frobenius(moment) * frobenius(inv) > renorm_max_condition) {
        out.fallback = true;
        return out;
    }
    out.B = inv;
    return out;
}

}  // namespace detail

/// Renormalization matrix of particle i: B_i = (-sum_j (m_j/rho_j) x_ij (x) grad W_ij)^-1.
/// Falls back to the identity when fewer than Dim neighbors exist, the moment
/// matrix is singular, or its condition number exceeds 1e8.
template <int Dim>
Renormalization<Dim> renormalization_matrix(std::size_t i, const std::vector<Particle<Dim>>& particles,
                                            const NeighborTable& table, const KernelSettings& kernel) {
    const KernelEvaluator ev(kernel.family, kernel.b, kernel.h, Dim);
    Mat<Dim> moment{};
    const auto& pi = particles[i];
    for (std::uint32_t j : table.neighbors(i)) {
        const auto& pj = particles[j];
        const Vec<Dim> x_ij = pi.x - pj.x;
        const double r = norm(x_ij);
        if (r == 0.0) continue;
        const Vec<Dim> g = x_ij * (ev.sample(kernel.pair_a(pi.a_knot, pj.a_knot), r).dw_dr / r);
        const double vol = pj.m / pj.rho;
        for (int a = 0; a < Dim; ++a)
            for (int b = 0; b < Dim; ++b) moment[a][b] -= vol * x_ij[a] * g[b];
    }
    return detail::invert_renormalization<Dim>(moment, table.neighbors(i).size());
}

namespace detail {

[[noreturn]] inline void report_non_finite(std::size_t i, const char* term) {
    std::ostringstream os;
    os << "non-finite " << term << " rate at particle " << i;
    throw NumericalError(os.str(), i);
}

}  // namespace detail

/// Evaluates all right-hand sides for one frozen snapshot.
///
/// Fixed-boundary particles contribute to the sums of their neighbors but
/// receive zero rates. The table must have been built for this configuration
/// (its stamp must equal `set.step`).
template <int Dim>
Rates<Dim> compute_rates(const ParticleSet<Dim>& set, const NeighborTable& table, const MaterialModel& mat,
                         const RateOptions<Dim>& opt) {
    const auto& ps = set.particles;
    const std::size_t n = ps.size();
    if (table.size() != n) throw std::logic_error("compute_rates: neighbor table size does not match particle count");
    if (table.stamp != set.step) throw std::logic_error("compute_rates: stale neighbor table");

    const KernelSettings& ks = opt.kernel;
    const KernelEvaluator ev(ks.family, ks.b, ks.h, Dim);
    const std::size_t pairs = table.pair_count();

    // Pass 1: raw kernel values and gradients per listed pair.
    std::vector<double> w(pairs);
    std::vector<Vec<Dim>> grad(pairs);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = table.offsets[i]; k < table.offsets[i + 1]; ++k) {
            const auto& pj = ps[table.indices[k]];
            const Vec<Dim> x_ij = ps[i].x - pj.x;
            const double r = norm(x_ij);
            const KernelSample s = ev.sample(ks.pair_a(ps[i].a_knot, pj.a_knot), r);
            w[k] = s.w;
            grad[k] = r > 0.0 ? x_ij * (s.dw_dr / r) : Vec<Dim>{};
        }
    }

    // Density and deviatoric stress seen by neighbors. Fixed particles keep
    // their stored state but act with the state of the adjacent material.
    std::vector<double> rho(n);
    std::vector<Mat3> dev(n);
    for (std::size_t i = 0; i < n; ++i) {
        rho[i] = ps[i].rho;
        dev[i] = ps[i].S;
        if (!ps[i].fixed() || !opt.mirror_boundary_stress) continue;
        double wsum = 0.0, rsum = 0.0;
        Mat3 ssum{};
        for (std::size_t k = table.offsets[i]; k < table.offsets[i + 1]; ++k) {
            const auto& pj = ps[table.indices[k]];
            if (pj.fixed()) continue;
            wsum += w[k];
            rsum += w[k] * (pj.rho - mat.rho0);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) ssum[a][b] += w[k] * pj.S[a][b];
        }
        if (wsum > 0.0) {
            rho[i] = mat.rho0 + rsum / wsum;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) dev[i][a][b] = ssum[a][b] / wsum;
        }
    }

    // Per-particle sigma / rho^2.
    std::vector<Mat<Dim>> sig_rho2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double inv = 1.0 / (rho[i] * rho[i]);
        sig_rho2[i] = cauchy_stress<Dim>(pressure(rho[i], mat), dev[i]);
        for (auto& row : sig_rho2[i])
            for (double& x : row) x *= inv;
    }

    Rates<Dim> rates(n);
    const double h = ks.h;

    std::vector<Mat<Dim>> B(n, identity<Dim>());
    if (opt.renormalize) {
        for (std::size_t i = 0; i < n; ++i) {
            if (ps[i].fixed()) continue;
            const std::size_t k0 = table.offsets[i], k1 = table.offsets[i + 1];
            Mat<Dim> moment{};
            for (std::size_t k = k0; k < k1; ++k) {
                const std::uint32_t j = table.indices[k];
                const Vec<Dim> x_ij = ps[i].x - ps[j].x;
                const double vol = ps[j].m / rho[j];
                for (int a = 0; a < Dim; ++a)
                    for (int b = 0; b < Dim; ++b) moment[a][b] -= vol * x_ij[a] * grad[k][b];
            }
            const auto ren = detail::invert_renormalization<Dim>(moment, k1 - k0);
            B[i] = ren.B;
            if (ren.fallback) ++rates.renorm_fallbacks;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto& pi = ps[i];
        if (pi.fixed()) continue;
        const std::size_t k0 = table.offsets[i], k1 = table.offsets[i + 1];

        double drho = 0.0, de = 0.0;
        Vec<Dim> dv{}, xsph{};
        Mat3 vgrad_sum{};  // sum_j V_j v_ij (x) W_hat_ij
        for (std::size_t k = k0; k < k1; ++k) {
            const std::uint32_t j = table.indices[k];
            const auto& pj = ps[j];
            const Vec<Dim> gw = opt.renormalize ? mat_vec<Dim>(B[i], grad[k]) : grad[k];
            const Vec<Dim> v_ij = pi.v - pj.v;
            const double pi_ij = artificial_viscosity<Dim>(pi, pj, mat, opt.viscosity, h);

            drho += pj.m * dot(v_ij, gw);
            for (int a = 0; a < Dim; ++a) {
                double t_dot_g = 0.0;
                for (int b = 0; b < Dim; ++b) {
                    const double t = sig_rho2[i][a][b] + sig_rho2[j][a][b] - (a == b ? pi_ij : 0.0);
                    t_dot_g += t * gw[b];
                }
                dv[a] += pj.m * t_dot_g;
                de -= 0.5 * pj.m * v_ij[a] * t_dot_g;
            }
            const double vol = pj.m / rho[j];
            for (int a = 0; a < Dim; ++a)
                for (int b = 0; b < Dim; ++b) vgrad_sum[a][b] += vol * v_ij[a] * gw[b];
            xsph += v_ij * (pj.m / (0.5 * (rho[i] + rho[j])) * w[k]);
        }

        // Velocity gradient L = -sum_j V_j v_ij (x) W_hat; strain rate and spin follow.
        Mat3 L{};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) L[a][b] = -vgrad_sum[a][b];
        const double trL = trace(L);
        Mat3 dS{};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                dS[a][b] = mat.G * (L[a][b] + L[b][a] - (a == b ? 2.0 / 3.0 * trL : 0.0));
                // Jaumann rotation: Omega S - S Omega, Omega = (L - L^T) / 2.
                double rot = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const double omega_ac = 0.5 * (L[a][c] - L[c][a]);
                    const double omega_cb = 0.5 * (L[c][b] - L[b][c]);
                    rot += omega_ac * pi.S[c][b] - pi.S[a][c] * omega_cb;
                }
                dS[a][b] += rot;
            }

        dv += opt.body_force;
        const Vec<Dim> dx = pi.v - xsph * opt.xsph_eps;

        if (!std::isfinite(drho)) detail::report_non_finite(i, "density");
        if (!all_finite(dv)) detail::report_non_finite(i, "momentum");
        if (!std::isfinite(de)) detail::report_non_finite(i, "energy");
        if (!all_finite(dx)) detail::report_non_finite(i, "position");
        for (const auto& row : dS)
            for (double x : row)
                if (!std::isfinite(x)) detail::report_non_finite(i, "deviatoric stress");

        rates.drho[i] = drho;
        rates.dv[i] = dv;
        rates.de[i] = de;
        rates.dS[i] = dS;
        rates.dx[i] = dx;
    }
    return rates;
}

}  // namespace asph
