#pragma once

/**
 * @file kernel.hpp
 * @brief B-spline smoothing kernels with a movable intermediate knot.
 *
 * Three radial kernel families are provided:
 *  - StandardCubic:     the classical cubic spline, support 2h.
 *  - QuadraticBSpline:  N_{1,2} over the knots {-b, -a, a, b}.
 *  - CubicBSpline:      N_{1,3} over the knots {-b, -a, 0, a, b}.
 *
 * The parametrized shapes are unnormalized B-spline basis functions of
 * q = r/h. Normalization is computed per (family, a, b, dim, h) so that the
 * kernel integrates to one over R^dim. Multidimensional kernels are the
 * radially symmetric extension W(|x|/h).
 */

#include "asph/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace asph {

enum class KernelFamily { StandardCubic, QuadraticBSpline, CubicBSpline };

inline std::string_view to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::StandardCubic: return "standard-cubic";
        case KernelFamily::QuadraticBSpline: return "quadratic-bspline";
        case KernelFamily::CubicBSpline: return "cubic-bspline";
    }
    return "unknown";
}

inline KernelFamily parse_kernel_family(std::string_view s) {
    if (s == "standard-cubic") return KernelFamily::StandardCubic;
    if (s == "quadratic-bspline" || s == "quadratic") return KernelFamily::QuadraticBSpline;
    if (s == "cubic-bspline" || s == "cubic") return KernelFamily::CubicBSpline;
    throw ArgumentError("unknown kernel family '" + std::string(s) + "'");
}

/// Smallest allowed distance of the intermediate knot from 0 and from b.
inline constexpr double knot_guard = 0.05;

struct KernelSpec {
    KernelFamily family = KernelFamily::CubicBSpline;
    double a = 1.0;  ///< intermediate knot (units of q)
    double b = 2.0;  ///< support half-width (units of q)
    double h = 1.0;  ///< smoothing length
    int dim = 1;

    bool parametrized() const { return family != KernelFamily::StandardCubic; }
    double chi() const { return a / b; }
    /// Support half-width in q.
    double support_q() const { return parametrized() ? b : 2.0; }
    /// Support radius in physical units.
    double support_radius() const { return support_q() * h; }

    void validate() const {
        if (!(h > 0.0) || !std::isfinite(h)) throw ArgumentError("kernel: h must be positive");
        if (dim < 1 || dim > 3) throw ArgumentError("kernel: dim must be 1, 2 or 3");
        if (parametrized() && !(a > 0.0 && a < b && std::isfinite(b)))
            throw ArgumentError("kernel: require 0 < a < b");
    }
};

// ---------------------------------------------------------------------------
// Knot vectors and the Cox-de Boor recursion
// ---------------------------------------------------------------------------

class KnotVector {
public:
    explicit KnotVector(std::vector<double> knots) : knots_(std::move(knots)) {
        for (std::size_t i = 1; i < knots_.size(); ++i)
            if (!(knots_[i - 1] <= knots_[i])) throw ArgumentError("knot vector must be non-decreasing");
    }

    static KnotVector symmetric_quadratic(double a, double b) { return KnotVector({-b, -a, a, b}); }
    static KnotVector symmetric_cubic(double a, double b) { return KnotVector({-b, -a, 0.0, a, b}); }

    std::size_t size() const { return knots_.size(); }
    double operator[](std::size_t i) const { return knots_[i]; }
    std::span<const double> values() const { return knots_; }

private:
    std::vector<double> knots_;
};

namespace detail {

template <class T>
T cox_de_boor(const KnotVector& k, std::size_t i, int p, const T& zeta) {
    if (p == 0) {
        // Half-open spans so that interior knots are not counted twice.
        return (k[i] <= zeta && zeta < k[i + 1]) ? T(1.0) : T(0.0);
    }
    const auto pp = static_cast<std::size_t>(p);
    T left(0.0), right(0.0);
    const double dl = k[i + pp] - k[i];
    const double dr = k[i + pp + 1] - k[i + 1];
    // 0/0 := 0 for repeated knots.
    if (dl != 0.0) left = (zeta - k[i]) / dl * cox_de_boor(k, i, p - 1, zeta);
    if (dr != 0.0) right = (k[i + pp + 1] - zeta) / dr * cox_de_boor(k, i + 1, p - 1, zeta);
    return left + right;
}

}  // namespace detail

/// N_{i,p}(zeta) by the Cox-de Boor recursion.
template <class T = double>
T bspline_basis(const KnotVector& knots, std::size_t i, int p, const T& zeta) {
    if (p < 0) throw ArgumentError("bspline_basis: degree must be non-negative");
    if (i + static_cast<std::size_t>(p) + 1 >= knots.size())
        throw ArgumentError("bspline_basis: index out of range for knot vector");
    return detail::cox_de_boor(knots, i, p, zeta);
}

// ---------------------------------------------------------------------------
// Closed-form shapes
// ---------------------------------------------------------------------------

/// Value and first two q-derivatives of an unnormalized shape.
struct ShapeDerivs {
    double w = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

namespace shape {

template <class T>
T standard_cubic(const T& q) {
    if (q < 1.0) return 1.0 - 1.5 * q * q + 0.75 * q * q * q;
    if (q < 2.0) {
        const T u = 2.0 - q;
        return 0.25 * u * u * u;
    }
    return T(0.0);
}

template <class T>
T standard_cubic_d1(const T& q) {
    if (q < 1.0) return -3.0 * q + 2.25 * q * q;
    if (q < 2.0) {
        const T u = 2.0 - q;
        return -0.75 * u * u;
    }
    return T(0.0);
}

template <class T>
T quadratic(double a, double b, const T& q) {
    if (q < a) return (a * b - q * q) / (a * (a + b));
    if (q < b) {
        const T u = b - q;
        return u * u / (b * b - a * a);
    }
    return T(0.0);
}

template <class T>
T quadratic_d1(double a, double b, const T& q) {
    if (q < a) return -2.0 * q / (a * (a + b));
    if (q < b) return -2.0 * (b - q) / (b * b - a * a);
    return T(0.0);
}

template <class T>
T cubic(double a, double b, const T& q) {
    if (q < a) return ((a + b) * q * q * q - 3.0 * a * b * q * q + a * a * b * b) / (a * a * b * (a + b));
    if (q < b) {
        const T u = b - q;
        return u * u * u / (b * (b * b - a * a));
    }
    return T(0.0);
}

template <class T>
T cubic_d1(double a, double b, const T& q) {
    if (q < a) return (3.0 * (a + b) * q * q - 6.0 * a * b * q) / (a * a * b * (a + b));
    if (q < b) {
        const T u = b - q;
        return -3.0 * u * u / (b * (b * b - a * a));
    }
    return T(0.0);
}

/// Unnormalized shape W(q) for any family; `a`, `b` ignored for StandardCubic.
template <class T>
T value(KernelFamily f, double a, double b, const T& q) {
    switch (f) {
        case KernelFamily::StandardCubic: return standard_cubic(q);
        case KernelFamily::QuadraticBSpline: return quadratic(a, b, q);
        case KernelFamily::CubicBSpline: return cubic(a, b, q);
    }
    return T(0.0);
}

/// dW/dq.
template <class T>
T d1(KernelFamily f, double a, double b, const T& q) {
    switch (f) {
        case KernelFamily::StandardCubic: return standard_cubic_d1(q);
        case KernelFamily::QuadraticBSpline: return quadratic_d1(a, b, q);
        case KernelFamily::CubicBSpline: return cubic_d1(a, b, q);
    }
    return T(0.0);
}

/// d2W/dq2 (one-sided from the right at knots).
inline double d2(KernelFamily f, double a, double b, double q) {
    switch (f) {
        case KernelFamily::StandardCubic:
            if (q < 1.0) return -3.0 + 4.5 * q;
            if (q < 2.0) return 1.5 * (2.0 - q);
            return 0.0;
        case KernelFamily::QuadraticBSpline:
            if (q < a) return -2.0 / (a * (a + b));
            if (q < b) return 2.0 / (b * b - a * a);
            return 0.0;
        case KernelFamily::CubicBSpline:
            if (q < a) return (6.0 * (a + b) * q - 6.0 * a * b) / (a * a * b * (a + b));
            if (q < b) return 6.0 * (b - q) / (b * (b * b - a * a));
            return 0.0;
    }
    return 0.0;
}

inline ShapeDerivs all(KernelFamily f, double a, double b, double q) {
    return {value(f, a, b, q), d1(f, a, b, q), d2(f, a, b, q)};
}

}  // namespace shape

/// Unnormalized piecewise shape at q = |x|/h.
inline double eval_unnormalized(const KernelSpec& spec, double q) {
    if (!(q >= 0.0)) throw ArgumentError("eval_unnormalized: q must be non-negative");
    return shape::value(spec.family, spec.a, spec.b, q);
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

namespace detail {

/// Gauss-Legendre nodes/weights on [-1, 1] for n = 4 and n = 8.
inline std::span<const std::pair<double, double>> gauss_legendre(int n) {
    static const std::pair<double, double> gl4[] = {
        {-0.8611363115940526, 0.3478548451374538},
        {-0.3399810435848563, 0.6521451548625461},
        {0.3399810435848563, 0.6521451548625461},
        {0.8611363115940526, 0.3478548451374538},
    };
    static const std::pair<double, double> gl8[] = {
        {-0.9602898564975363, 0.1012285362903763},
        {-0.7966664774136267, 0.2223810344533745},
        {-0.5255324099163290, 0.3137066458778873},
        {-0.1834346424956498, 0.3626837833783620},
        {0.1834346424956498, 0.3626837833783620},
        {0.5255324099163290, 0.3137066458778873},
        {0.7966664774136267, 0.2223810344533745},
        {0.9602898564975363, 0.1012285362903763},
    };
    if (n == 4) return gl4;
    return gl8;
}

/// Integral of q^power * W(q) over the support, split at the knots.
inline double radial_moment(KernelFamily f, double a, double b, int power, int order) {
    const double support = f == KernelFamily::StandardCubic ? 2.0 : b;
    const double knot = f == KernelFamily::StandardCubic ? 1.0 : a;
    const double breaks[3] = {0.0, knot, support};
    double sum = 0.0;
    for (int piece = 0; piece < 2; ++piece) {
        const double lo = breaks[piece], hi = breaks[piece + 1];
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        for (auto [x, w] : gauss_legendre(order)) {
            const double q = mid + half * x;
            sum += w * half * std::pow(q, power) * shape::value(f, a, b, q);
        }
    }
    return sum;
}

/// Normalization for h = 1.
inline double unit_normalization(KernelFamily f, double a, double b, int dim) {
    if (f == KernelFamily::StandardCubic) {
        switch (dim) {
            case 1: return 2.0 / 3.0;
            case 2: return 10.0 / (7.0 * std::numbers::pi);
            default: return 1.0 / std::numbers::pi;
        }
    }
    if (dim == 1) {
        // A B-spline basis function of degree p integrates to (last - first knot)/(p + 1).
        const int degree = f == KernelFamily::CubicBSpline ? 3 : 2;
        return (degree + 1) / (2.0 * b);
    }
    // Radial integral: 2*pi*int q W dq in 2D, 4*pi*int q^2 W dq in 3D.
    const int power = dim - 1;
    const double solid = dim == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
    const double coarse = radial_moment(f, a, b, power, 4);
    const double fine = radial_moment(f, a, b, power, 8);
    if (!(std::abs(coarse - fine) <= 1e-12 * std::abs(fine)) || !(fine > 0.0)) {
        std::ostringstream os;
        os.precision(17);
        os << "kernel normalization quadrature did not converge: family=" << to_string(f) << " a=" << a
           << " b=" << b << " dim=" << dim << " GL4=" << coarse << " GL8=" << fine;
        throw QuadratureError(os.str());
    }
    return 1.0 / (solid * fine);
}

}  // namespace detail

/// alpha such that alpha * W_unnorm(|x|/h) integrates to one over R^dim.
inline double normalization_constant(const KernelSpec& spec) {
    spec.validate();
    return detail::unit_normalization(spec.family, spec.a, spec.b, spec.dim) / std::pow(spec.h, spec.dim);
}

/// Normalized kernel value at distance r.
inline double eval(const KernelSpec& spec, double r) {
    return normalization_constant(spec) * eval_unnormalized(spec, r / spec.h);
}

/// Radial kernel gradient with respect to the first argument of W(x_i - x_j).
template <int Dim>
Vec<Dim> eval_grad(const KernelSpec& spec, const Vec<Dim>& r_vec) {
    const double r = norm(r_vec);
    if (r == 0.0) return Vec<Dim>{};
    const double dw = normalization_constant(spec) * shape::d1(spec.family, spec.a, spec.b, r / spec.h) / spec.h;
    return r_vec * (dw / r);
}

/// Distance q* at which |dW/dq| peaks.
inline double grad_peak_location(const KernelSpec& spec) {
    switch (spec.family) {
        case KernelFamily::CubicBSpline: {
            const double chi = spec.chi();
            return chi / (1.0 + chi) * spec.b;
        }
        case KernelFamily::QuadraticBSpline: return spec.a;
        case KernelFamily::StandardCubic: break;
    }
    throw ArgumentError("grad_peak_location: unsupported for the standard cubic kernel");
}

// ---------------------------------------------------------------------------
// Normalization cache for the solver's inner loop
// ---------------------------------------------------------------------------

/// alpha(a) at h = 1 tabulated on a uniform grid of a and linearly interpolated.
class NormalizationTable {
public:
    static constexpr double step = 1e-3;

    NormalizationTable(KernelFamily family, double b, int dim)
        : family_(family), b_(b), dim_(dim), a_lo_(0.5 * knot_guard), a_hi_(b - 0.5 * knot_guard) {
        const auto n = static_cast<std::size_t>(std::floor((a_hi_ - a_lo_) / step)) + 1;
        values_.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            values_[k] = detail::unit_normalization(family, a_lo_ + step * static_cast<double>(k), b, dim);
    }

    double lookup(double a) const {
        const double s = (a - a_lo_) / step;
        if (!(s >= 0.0) || s >= static_cast<double>(values_.size() - 1))
            return detail::unit_normalization(family_, a, b_, dim_);
        const auto k = static_cast<std::size_t>(s);
        const double t = s - static_cast<double>(k);
        return values_[k] + t * (values_[k + 1] - values_[k]);
    }

private:
    KernelFamily family_;
    double b_;
    int dim_;
    double a_lo_, a_hi_;
    std::vector<double> values_;
};

/// Process-wide registry of normalization tables, filled once per key.
class NormalizationCache {
public:
    static NormalizationCache& instance() {
        static NormalizationCache cache;
        return cache;
    }

    std::shared_ptr<const NormalizationTable> table(KernelFamily family, double b, int dim) {
        const auto key = std::make_tuple(static_cast<int>(family), b, dim);
        std::lock_guard lock(mutex_);
        auto it = tables_.find(key);
        if (it != tables_.end()) return it->second;
        auto t = std::make_shared<const NormalizationTable>(family, b, dim);
        tables_.emplace(key, t);
        return t;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, double, int>, std::shared_ptr<const NormalizationTable>> tables_;
};

/// Kernel value and radial derivative at one distance.
struct KernelSample {
    double w = 0.0;
    double dw_dr = 0.0;
};

/// Fast evaluation of a kernel family for varying intermediate knot `a`.
class KernelEvaluator {
public:
    KernelEvaluator(KernelFamily family, double b, double h, int dim)
        : family_(family), b_(b), h_(h), inv_h_(1.0 / h), inv_h_dim_(1.0 / std::pow(h, dim)) {
        KernelSpec{family, std::min(1.0, 0.5 * b), b, h, dim}.validate();
        if (family == KernelFamily::StandardCubic)
            alpha_standard_ = detail::unit_normalization(family, 0.0, b, dim);
        else
            table_ = NormalizationCache::instance().table(family, b, dim);
    }

    KernelFamily family() const { return family_; }
    double b() const { return b_; }
    double h() const { return h_; }
    double support_radius() const { return (family_ == KernelFamily::StandardCubic ? 2.0 : b_) * h_; }

    double alpha(double a) const {
        return (table_ ? table_->lookup(a) : alpha_standard_) * inv_h_dim_;
    }

    KernelSample sample(double a, double r) const {
        const double q = r * inv_h_;
        const double al = alpha(a);
        return {al * shape::value(family_, a, b_, q), al * shape::d1(family_, a, b_, q) * inv_h_};
    }

private:
    KernelFamily family_;
    double b_, h_, inv_h_, inv_h_dim_;
    double alpha_standard_ = 0.0;
    std::shared_ptr<const NormalizationTable> table_;
};

}  // namespace asph
