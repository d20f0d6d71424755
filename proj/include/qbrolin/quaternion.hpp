#pragma once

// Quaternion arithmetic, slice decomposition q = alpha + I*beta, spheres of
// imaginary units and deterministic quadrature on the unit 2-sphere S.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace qbrolin {

using cplx = std::complex<double>;

struct Quaternion {
    double w = 0, x = 0, y = 0, z = 0;  // w + x i + y j + z k

    constexpr Quaternion() = default;
    constexpr Quaternion(double w_, double x_ = 0, double y_ = 0, double z_ = 0)
        : w(w_), x(x_), y(y_), z(z_) {}

    static constexpr Quaternion i() { return {0, 1, 0, 0}; }
    static constexpr Quaternion j() { return {0, 0, 1, 0}; }
    static constexpr Quaternion k() { return {0, 0, 0, 1}; }

    constexpr bool operator==(const Quaternion&) const = default;

    constexpr Quaternion operator-() const { return {-w, -x, -y, -z}; }
    constexpr Quaternion& operator+=(const Quaternion& o) {
        w += o.w; x += o.x; y += o.y; z += o.z;
        return *this;
    }
    constexpr Quaternion& operator-=(const Quaternion& o) {
        w -= o.w; x -= o.x; y -= o.y; z -= o.z;
        return *this;
    }
    constexpr Quaternion& operator*=(double s) {
        w *= s; x *= s; y *= s; z *= s;
        return *this;
    }

    constexpr Quaternion conj() const { return {w, -x, -y, -z}; }
    constexpr double norm2() const { return w * w + x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
    constexpr double re() const { return w; }
    constexpr Quaternion im() const { return {0, x, y, z}; }
    double im_norm() const { return std::sqrt(x * x + y * y + z * z); }
    bool is_finite() const {
        return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }

    /// q^-1 = q^c / |q|^2. Throws ZeroDivisor for q = 0.
    Quaternion inverse() const;
};

constexpr Quaternion operator+(Quaternion a, const Quaternion& b) { return a += b; }
constexpr Quaternion operator-(Quaternion a, const Quaternion& b) { return a -= b; }
constexpr Quaternion operator*(Quaternion a, double s) { return a *= s; }
constexpr Quaternion operator*(double s, Quaternion a) { return a *= s; }

/// Hamilton product.
constexpr Quaternion operator*(const Quaternion& a, const Quaternion& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Quaternion qmul(const Quaternion& a, const Quaternion& b) { return a * b; }

/// A point of S = {q : q^2 = -1}: a purely imaginary unit quaternion.
class ImaginaryUnit {
public:
    /// Canonical unit i.
    constexpr ImaginaryUnit() = default;
    /// Normalizes (x, y, z). Throws PreconditionViolation for the zero vector.
    ImaginaryUnit(double x, double y, double z);

    static ImaginaryUnit i() { return {}; }
    static ImaginaryUnit j() { return {0, 1, 0}; }
    static ImaginaryUnit k() { return {0, 0, 1}; }

    double x() const { return v_[0]; }
    double y() const { return v_[1]; }
    double z() const { return v_[2]; }
    std::array<double, 3> components() const { return v_; }
    Quaternion as_quaternion() const { return {0, v_[0], v_[1], v_[2]}; }
    ImaginaryUnit operator-() const;

    /// alpha + I beta as a quaternion.
    Quaternion embed(double alpha, double beta) const {
        return {alpha, beta * v_[0], beta * v_[1], beta * v_[2]};
    }
    Quaternion embed(cplx z) const { return embed(z.real(), z.imag()); }

    bool operator==(const ImaginaryUnit&) const = default;

private:
    std::array<double, 3> v_{1.0, 0.0, 0.0};
};

/// q = alpha + unit * beta with beta >= 0. Real points carry the canonical unit i.
struct SlicePoint {
    double alpha = 0;
    double beta = 0;
    ImaginaryUnit unit{};

    Quaternion embed() const { return unit.embed(alpha, beta); }
    cplx as_complex() const { return {alpha, beta}; }
};

SlicePoint slice_decompose(const Quaternion& q);

/// Coordinates of q in the slice C_I, q = a + I b, provided q lies in C_I.
/// The imaginary coordinate is signed (b may be negative).
cplx slice_coordinates(const Quaternion& q, const ImaginaryUnit& unit);

/// Distance of q from the plane C_I.
double slice_distance(const Quaternion& q, const ImaginaryUnit& unit);

/// The 2-sphere S_{alpha + I rho} = {alpha + J rho : J in S}, rho > 0.
class Sphere2 {
public:
    Sphere2(double alpha, double rho);
    double alpha() const { return alpha_; }
    double rho() const { return rho_; }
    Quaternion point(const ImaginaryUnit& unit) const { return unit.embed(alpha_, rho_); }
    bool contains(const Quaternion& q, double tol = 1e-12) const;

private:
    double alpha_;
    double rho_;
};

struct QuadratureNode {
    ImaginaryUnit unit;
    double weight;
};

/// Node set on S with total weight 4*pi.
struct SphereQuadrature {
    int level = 0;
    std::vector<QuadratureNode> nodes;

    std::size_t size() const { return nodes.size(); }
    double total_weight() const;

    /// Integral over S of f(I) dI (total measure 4*pi).
    template <class F>
    double integrate(F&& f) const {
        double acc = 0.0;
        for (const auto& n : nodes) acc += n.weight * f(n.unit);
        return acc;
    }

    /// The same nodes under a rigid rotation (unit quaternion r: I -> r I r^c).
    SphereQuadrature rotated(const Quaternion& r) const;
};

/// Levels 1..5 are the octahedrally symmetric Lebedev rules with 6, 14, 26,
/// 38, 50 nodes (exact through degree 3, 5, 7, 9, 11). Levels >= 6 use a
/// Gauss-Legendre x uniform-azimuth product rule with `level + 2` latitude
/// nodes, exact through degree 2*level + 3.
SphereQuadrature sphere_quadrature(int level);

/// Polynomial degree integrated exactly by sphere_quadrature(level).
int sphere_quadrature_exactness(int level);

/// Uniform point on S from two uniform [0,1) variates.
ImaginaryUnit uniform_unit(double u1, double u2);

}  // namespace qbrolin
