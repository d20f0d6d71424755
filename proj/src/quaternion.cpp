#include "qbrolin/quaternion.hpp"

#include <numbers>

#include "qbrolin/errors.hpp"
#include "qbrolin/numeric_policy.hpp"

namespace qbrolin {

NumericPolicy& numeric_policy() {
    static NumericPolicy policy;
    return policy;
}

Quaternion Quaternion::inverse() const {
    const double n2 = norm2();
    if (n2 == 0.0) throw ZeroDivisor("inverse of the zero quaternion");
    return conj() * (1.0 / n2);
}

ImaginaryUnit::ImaginaryUnit(double x, double y, double z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n))
        throw PreconditionViolation("imaginary unit needs a nonzero finite direction");
    v_ = {x / n, y / n, z / n};
}

ImaginaryUnit ImaginaryUnit::operator-() const {
    ImaginaryUnit u;
    u.v_ = {-v_[0], -v_[1], -v_[2]};
    return u;
}

SlicePoint slice_decompose(const Quaternion& q) {
    const double beta = q.im_norm();
    if (beta == 0.0) return {q.w, 0.0, ImaginaryUnit::i()};
    return {q.w, beta, ImaginaryUnit(q.x, q.y, q.z)};
}

cplx slice_coordinates(const Quaternion& q, const ImaginaryUnit& unit) {
    return {q.w, q.x * unit.x() + q.y * unit.y() + q.z * unit.z()};
}

double slice_distance(const Quaternion& q, const ImaginaryUnit& unit) {
    const double b = q.x * unit.x() + q.y * unit.y() + q.z * unit.z();
    const double dx = q.x - b * unit.x();
    const double dy = q.y - b * unit.y();
    const double dz = q.z - b * unit.z();
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Sphere2::Sphere2(double alpha, double rho) : alpha_(alpha), rho_(rho) {
    if (!(rho > 0.0) || !std::isfinite(rho) || !std::isfinite(alpha))
        throw PreconditionViolation("Sphere2 needs finite alpha and rho > 0");
}

bool Sphere2::contains(const Quaternion& q, double tol) const {
    return std::abs(q.w - alpha_) <= tol && std::abs(q.im_norm() - rho_) <= tol;
}

double SphereQuadrature::total_weight() const {
    double acc = 0.0;
    for (const auto& n : nodes) acc += n.weight;
    return acc;
}

SphereQuadrature SphereQuadrature::rotated(const Quaternion& r) const {
    const Quaternion u = r * (1.0 / r.norm());
    SphereQuadrature out{level, {}};
    out.nodes.reserve(nodes.size());
    for (const auto& n : nodes) {
        const Quaternion v = u * n.unit.as_quaternion() * u.conj();
        out.nodes.push_back({ImaginaryUnit(v.x, v.y, v.z), n.weight});
    }
    return out;
}

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// Orbit generators of the octahedral group acting on (a, b, c).
void add_axes(std::vector<QuadratureNode>& out, double w) {
    for (int s : {1, -1}) {
        out.push_back({ImaginaryUnit(s, 0, 0), w});
        out.push_back({ImaginaryUnit(0, s, 0), w});
        out.push_back({ImaginaryUnit(0, 0, s), w});
    }
}

void add_corners(std::vector<QuadratureNode>& out, double w) {
    for (int sx : {1, -1})
        for (int sy : {1, -1})
            for (int sz : {1, -1}) out.push_back({ImaginaryUnit(sx, sy, sz), w});
}

void add_edges(std::vector<QuadratureNode>& out, double w) {
    for (int s1 : {1, -1})
        for (int s2 : {1, -1}) {
            out.push_back({ImaginaryUnit(s1, s2, 0), w});
            out.push_back({ImaginaryUnit(s1, 0, s2), w});
            out.push_back({ImaginaryUnit(0, s1, s2), w});
        }
}

// 24 points: all permutations of (+-p, +-q, 0).
void add_pq0(std::vector<QuadratureNode>& out, double p, double q, double w) {
    for (int s1 : {1, -1})
        for (int s2 : {1, -1}) {
            const double a = s1 * p, b = s2 * q;
            out.push_back({ImaginaryUnit(a, b, 0), w});
            out.push_back({ImaginaryUnit(b, a, 0), w});
            out.push_back({ImaginaryUnit(a, 0, b), w});
            out.push_back({ImaginaryUnit(b, 0, a), w});
            out.push_back({ImaginaryUnit(0, a, b), w});
            out.push_back({ImaginaryUnit(0, b, a), w});
        }
}

// 24 points: permutations of (+-l, +-l, +-m).
void add_llm(std::vector<QuadratureNode>& out, double l, double m, double w) {
    for (int s1 : {1, -1})
        for (int s2 : {1, -1})
            for (int s3 : {1, -1}) {
                const double a = s1 * l, b = s2 * l, c = s3 * m;
                out.push_back({ImaginaryUnit(a, b, c), w});
                out.push_back({ImaginaryUnit(a, c, b), w});
                out.push_back({ImaginaryUnit(c, a, b), w});
            }
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-16) break;
        }
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

}  // namespace

SphereQuadrature sphere_quadrature(int level) {
    if (level < 1) throw PreconditionViolation("quadrature level must be >= 1");
    SphereQuadrature q{level, {}};
    auto& n = q.nodes;
    switch (level) {
        case 1:
            add_axes(n, 1.0 / 6.0);
            break;
        case 2:
            add_axes(n, 1.0 / 15.0);
            add_corners(n, 3.0 / 40.0);
            break;
        case 3:
            add_axes(n, 1.0 / 21.0);
            add_edges(n, 4.0 / 105.0);
            add_corners(n, 27.0 / 840.0);
            break;
        case 4:
            add_axes(n, 1.0 / 105.0);
            add_corners(n, 9.0 / 280.0);
            add_pq0(n, 0.4597008433809831, 0.8880738339771153, 1.0 / 35.0);
            break;
        case 5:
            add_axes(n, 4.0 / 315.0);
            add_edges(n, 64.0 / 2835.0);
            add_corners(n, 27.0 / 1280.0);
            add_llm(n, 0.3015113445777636, 0.9045340337332909, 14641.0 / 725760.0);
            break;
        default: {
            const int m = level + 2;
            std::vector<double> x, w;
            gauss_legendre(m, x, w);
            const int naz = 2 * m;
            for (int a = 0; a < m; ++a) {
                const double s = std::sqrt(std::max(0.0, 1.0 - x[a] * x[a]));
                for (int b = 0; b < naz; ++b) {
                    const double phi = 2.0 * std::numbers::pi * (b + 0.5) / naz;
                    n.push_back({ImaginaryUnit(s * std::cos(phi), s * std::sin(phi), x[a]),
                                 w[a] / (2.0 * naz)});
                }
            }
            break;
        }
    }
    // Lebedev weights above are normalized to 1.
    for (auto& node : n) node.weight *= kFourPi;
    return q;
}

int sphere_quadrature_exactness(int level) {
    static constexpr int lebedev[] = {0, 3, 5, 7, 9, 11};
    if (level < 1) return -1;
    if (level <= 5) return lebedev[level];
    return 2 * (level + 2) - 1;
}

ImaginaryUnit uniform_unit(double u1, double u2) {
    const double z = 1.0 - 2.0 * u1;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * std::numbers::pi * u2;
    return ImaginaryUnit(r * std::cos(phi), r * std::sin(phi), z);
}

}  // namespace qbrolin
