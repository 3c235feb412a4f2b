#pragma once

// Randomized kernel property checks shared by the unit tests and the
// acceptance runner. Each check returns an empty string on success and a
// description of the first counterexample otherwise.

#include "asph/kernel.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace asph::checks {

struct KernelDraw {
    KernelFamily family;
    double a, b, h;

    KernelSpec spec(int dim) const { return {family, a, b, h, dim}; }
    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        os << to_string(family) << " a=" << a << " b=" << b << " h=" << h;
        return os.str();
    }
};

/// Random kernels: both B-spline families with 0.05 <= a <= b - 0.05, plus the standard cubic.
inline std::vector<KernelDraw> kernel_draws(int count, std::uint64_t seed = 20240601) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ub(1.2, 3.0), uh(0.1, 4.0), u01(0.0, 1.0);
    std::vector<KernelDraw> out;
    for (int n = 0; n < count; ++n) {
        const double b = ub(rng);
        const double a = knot_guard + u01(rng) * (b - 2.0 * knot_guard);
        const KernelFamily f = n % 5 == 4 ? KernelFamily::StandardCubic
                               : n % 2 == 0 ? KernelFamily::CubicBSpline
                                            : KernelFamily::QuadraticBSpline;
        out.push_back({f, a, f == KernelFamily::StandardCubic ? 2.0 : b, uh(rng)});
    }
    // Edge knots.
    out.push_back({KernelFamily::CubicBSpline, knot_guard, 2.0, 1.0});
    out.push_back({KernelFamily::CubicBSpline, 2.0 - knot_guard, 2.0, 1.0});
    out.push_back({KernelFamily::QuadraticBSpline, knot_guard, 2.0, 1.0});
    out.push_back({KernelFamily::QuadraticBSpline, 2.0 - knot_guard, 2.0, 1.0});
    return out;
}

inline double inner_knot(const KernelDraw& k) { return k.family == KernelFamily::StandardCubic ? 1.0 : k.a; }

inline std::string fail(const KernelDraw& k, const std::string& what, double value) {
    std::ostringstream os;
    os.precision(17);
    os << what << " (" << k.describe() << "): " << value;
    return os.str();
}

/// W > 0 inside the support, W = 0 and grad W = 0 on and beyond it.
inline std::string check_positivity_and_support(const std::vector<KernelDraw>& draws) {
    for (const auto& k : draws) {
        const auto spec = k.spec(2);
        const double R = spec.support_radius();
        for (int s = 0; s <= 400; ++s) {
            const double r = R * s / 400.0 * (1.0 - 1e-12);
            const double w = eval(spec, r);
            if (!(w > 0.0)) return fail(k, "non-positive value inside support at r", r);
        }
        for (double f : {1.0 + 1e-12, 1.5, 10.0}) {
            const double w = eval(spec, f * R);
            const auto g = eval_grad<2>(spec, Vec<2>{{f * R, 0.0}});
            if (w != 0.0 || g[0] != 0.0 || g[1] != 0.0) return fail(k, "non-zero value outside support at r/R", f);
        }
    }
    return {};
}

/// Composite Simpson on [lo, hi]; exact for the cubic pieces.
template <class F>
double simpson(F&& f, double lo, double hi, int intervals) {
    const double step = (hi - lo) / intervals;
    double s = f(lo) + f(hi);
    for (int i = 1; i < intervals; ++i) s += f(lo + i * step) * (i % 2 ? 4.0 : 2.0);
    return s * step / 3.0;
}

/// Integral of alpha W over R^dim equals one (1D and 2D), integrated piecewise between knots.
inline std::string check_unit_integral(const std::vector<KernelDraw>& draws, double tol = 1e-8) {
    for (const auto& k : draws) {
        for (int dim : {1, 2, 3}) {
            const auto spec = k.spec(dim);
            const double breaks[] = {0.0, inner_knot(k) * k.h, spec.support_radius()};
            double total = 0.0;
            for (int p = 0; p < 2; ++p) {
                auto f = [&](double r) {
                    const double w = eval(spec, r);
                    if (dim == 1) return 2.0 * w;
                    if (dim == 2) return 2.0 * std::numbers::pi * r * w;
                    return 4.0 * std::numbers::pi * r * r * w;
                };
                total += simpson(f, breaks[p], breaks[p + 1], 2000);
            }
            if (!(std::abs(total - 1.0) <= tol)) return fail(k, "integral deviates from one, dim " + std::to_string(dim), total);
        }
    }
    return {};
}

/// Value and first derivative are continuous at every knot; the cubic families
/// also have a continuous second derivative.
inline std::string check_knot_continuity(const std::vector<KernelDraw>& draws) {
    for (const auto& k : draws) {
        const double a = inner_knot(k);
        const double b = k.family == KernelFamily::StandardCubic ? 2.0 : k.b;
        const bool c2 = k.family != KernelFamily::QuadraticBSpline;
        for (double q : {a, b}) {
            const double eps = 1e-9;
            const auto lo = shape::all(k.family, k.a, k.b, q - eps);
            const auto hi = shape::all(k.family, k.a, k.b, q + eps);
            const double scale = std::abs(shape::value(k.family, k.a, k.b, 0.0));
            const double d2scale = std::max(std::abs(lo.d2), std::abs(hi.d2)) + scale;
            if (std::abs(lo.w - hi.w) > 1e-7 * scale) return fail(k, "value jump at q", q);
            if (std::abs(lo.d1 - hi.d1) > 1e-6 * d2scale) return fail(k, "first derivative jump at q", q);
            if (c2 && std::abs(lo.d2 - hi.d2) > 1e-6 * d2scale) return fail(k, "second derivative jump at q", q);
        }
        // Smooth peak at the origin.
        if (shape::d1(k.family, k.a, k.b, 0.0) != 0.0) return fail(k, "non-zero slope at the origin", 0.0);
    }
    return {};
}

/// The closed-form piecewise shapes equal the Cox-de Boor basis function N_{0,p}
/// over the symmetric knot vectors, on both sides of the origin.
inline std::string check_cox_de_boor(const std::vector<KernelDraw>& draws, double tol = 1e-10) {
    for (const auto& k : draws) {
        if (k.family == KernelFamily::StandardCubic) continue;
        const bool cubic = k.family == KernelFamily::CubicBSpline;
        const auto knots = cubic ? KnotVector::symmetric_cubic(k.a, k.b) : KnotVector::symmetric_quadratic(k.a, k.b);
        const double peak = shape::value(k.family, k.a, k.b, 0.0);
        for (int s = -300; s <= 300; ++s) {
            const double q = k.b * s / 300.5;
            const double closed = shape::value(k.family, k.a, k.b, std::abs(q));
            const double basis = bspline_basis(knots, 0, cubic ? 3 : 2, q);
            if (!(std::abs(closed - basis) <= tol * std::max(std::abs(closed), 1e-3 * peak)))
                return fail(k, "closed form differs from recursion at q", q);
        }
    }
    return {};
}

/// Analytic gradient against central differences of the kernel value, in 2D,
/// away from the knots where the second derivative may jump.
inline std::string check_gradient_fd(const std::vector<KernelDraw>& draws, double tol = 1e-6) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& k : draws) {
        const auto spec = k.spec(2);
        const double R = spec.support_radius();
        const double a = inner_knot(k) * k.h;
        int done = 0;
        while (done < 40) {
            const double r = R * (0.05 + 0.9 * u(rng));
            if (std::abs(r - a) < 1e-3 * R || R - r < 1e-3 * R) continue;
            const double th = 2.0 * std::numbers::pi * u(rng);
            const Vec<2> x{{r * std::cos(th), r * std::sin(th)}};
            const auto g = eval_grad<2>(spec, x);
            const double step = 1e-5 * k.h;
            double gmax = 0.0, err = 0.0;
            for (int d = 0; d < 2; ++d) {
                Vec<2> xp = x, xm = x;
                xp[d] += step;
                xm[d] -= step;
                const double fd = (eval(spec, norm(xp)) - eval(spec, norm(xm))) / (2.0 * step);
                err = std::max(err, std::abs(fd - g[d]));
                gmax = std::max(gmax, std::abs(g[d]));
            }
            if (!(err <= tol * norm(g) + 1e-12 * gmax)) return fail(k, "gradient differs from finite differences at r", r);
            ++done;
        }
    }
    return {};
}

/// |dW/dq| peaks at chi/(1+chi) b for the cubic family (at a for the quadratic).
inline std::string check_gradient_peak(const std::vector<KernelDraw>& draws, double tol = 1e-6) {
    for (const auto& k : draws) {
        if (k.family == KernelFamily::StandardCubic) continue;
        const auto spec = k.spec(1);
        // Golden-section search of |W'| on [0, b] around a dense-grid maximum.
        auto g = [&](double q) { return std::abs(shape::d1(k.family, k.a, k.b, q)); };
        double best = 0.0, arg = 0.0;
        for (int s = 0; s <= 4000; ++s) {
            const double q = k.b * s / 4000.0;
            if (g(q) > best) best = g(q), arg = q;
        }
        double lo = std::max(0.0, arg - k.b / 4000.0), hi = std::min(k.b, arg + k.b / 4000.0);
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        for (int it = 0; it < 200; ++it) {
            const double m1 = hi - phi * (hi - lo), m2 = lo + phi * (hi - lo);
            if (g(m1) < g(m2)) lo = m1; else hi = m2;
        }
        const double found = 0.5 * (lo + hi);
        if (!(std::abs(found - grad_peak_location(spec)) <= tol * k.b)) return fail(k, "gradient peak found at q", found);
    }
    return {};
}

}  // namespace asph::checks
