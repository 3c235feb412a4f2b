#pragma once

/**
 * @file types.hpp
 * @brief Small fixed-size vector and tensor types shared by every module.
 */

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace asph {

/// Fixed-size spatial vector.
template <int Dim>
struct Vec {
    static_assert(Dim >= 1 && Dim <= 3, "Vec supports 1, 2 or 3 dimensions");
    std::array<double, Dim> c{};

    constexpr double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    constexpr double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

    constexpr Vec& operator+=(const Vec& o) {
        for (int d = 0; d < Dim; ++d) (*this)[d] += o[d];
        return *this;
    }
    constexpr Vec& operator-=(const Vec& o) {
        for (int d = 0; d < Dim; ++d) (*this)[d] -= o[d];
        return *this;
    }
    constexpr Vec& operator*=(double s) {
        for (int d = 0; d < Dim; ++d) (*this)[d] *= s;
        return *this;
    }
    friend constexpr Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend constexpr Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend constexpr Vec operator*(Vec a, double s) { return a *= s; }
    friend constexpr Vec operator*(double s, Vec a) { return a *= s; }
    friend constexpr Vec operator-(Vec a) { return a *= -1.0; }
    friend constexpr bool operator==(const Vec&, const Vec&) = default;
};

template <int Dim>
constexpr double dot(const Vec<Dim>& a, const Vec<Dim>& b) {
    double s = 0.0;
    for (int d = 0; d < Dim; ++d) s += a[d] * b[d];
    return s;
}

template <int Dim>
inline double norm(const Vec<Dim>& a) {
    return std::sqrt(dot(a, a));
}

template <int Dim>
inline bool all_finite(const Vec<Dim>& a) {
    for (int d = 0; d < Dim; ++d)
        if (!std::isfinite(a[d])) return false;
    return true;
}

/// Square matrix of spatial dimension (renormalization matrices, in-plane stress).
template <int Dim>
using Mat = std::array<std::array<double, Dim>, Dim>;

/// Full 3x3 tensor. Deviatoric stress is always stored in 3D so that the
/// out-of-plane component of a plane-strain (2D) or uniaxial-strain (1D)
/// state is carried explicitly and the tensor stays traceless.
using Mat3 = std::array<std::array<double, 3>, 3>;

template <int Dim>
constexpr Mat<Dim> identity() {
    Mat<Dim> m{};
    for (int d = 0; d < Dim; ++d) m[d][d] = 1.0;
    return m;
}

template <std::size_t N>
constexpr double trace(const std::array<std::array<double, N>, N>& m) {
    double t = 0.0;
    for (std::size_t d = 0; d < N; ++d) t += m[d][d];
    return t;
}

template <std::size_t N>
inline double frobenius(const std::array<std::array<double, N>, N>& m) {
    double s = 0.0;
    for (const auto& row : m)
        for (double x : row) s += x * x;
    return std::sqrt(s);
}

template <int Dim>
constexpr Vec<Dim> mat_vec(const Mat<Dim>& m, const Vec<Dim>& v) {
    Vec<Dim> r{};
    for (int a = 0; a < Dim; ++a)
        for (int b = 0; b < Dim; ++b) r[a] += m[a][b] * v[b];
    return r;
}

/// Inverse of a small matrix; returns false when singular (zero or non-finite determinant).
template <int Dim>
inline bool invert(const Mat<Dim>& m, Mat<Dim>& out) {
    if constexpr (Dim == 1) {
        if (m[0][0] == 0.0 || !std::isfinite(m[0][0])) return false;
        out[0][0] = 1.0 / m[0][0];
        return true;
    } else if constexpr (Dim == 2) {
        const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if (det == 0.0 || !std::isfinite(det)) return false;
        const double inv = 1.0 / det;
        out[0][0] = m[1][1] * inv;
        out[0][1] = -m[0][1] * inv;
        out[1][0] = -m[1][0] * inv;
        out[1][1] = m[0][0] * inv;
        return true;
    } else {
        const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
        const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
        const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
        const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
        if (det == 0.0 || !std::isfinite(det)) return false;
        const double inv = 1.0 / det;
        out[0][0] = c00 * inv;
        out[1][0] = c01 * inv;
        out[2][0] = c02 * inv;
        out[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv;
        out[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv;
        out[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv;
        out[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv;
        out[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv;
        out[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv;
        return true;
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Violated precondition on a public function argument.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite or non-physical value produced during a computation.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::size_t particle = static_cast<std::size_t>(-1))
        : std::runtime_error(what), particle_(particle) {}
    std::size_t particle() const noexcept { return particle_; }

private:
    std::size_t particle_;
};

/// Numerical quadrature failed to agree between two orders.
class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Not enough samples to derive a requested statistic.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace asph
