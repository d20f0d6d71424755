#include "qbrolin/qpolynomial.hpp"

#include <algorithm>

#include "qbrolin/errors.hpp"
#include "qbrolin/numeric_policy.hpp"
#include "qbrolin/roots.hpp"

namespace qbrolin {

ComplexPoly::ComplexPoly(std::vector<cplx> coeffs) : c_(std::move(coeffs)) {
    while (!c_.empty() && c_.back() == cplx(0.0)) c_.pop_back();
}

bool ComplexPoly::has_real_coefficients(double tol) const {
    return std::all_of(c_.begin(), c_.end(), [tol](cplx c) { return std::abs(c.imag()) <= tol; });
}

cplx ComplexPoly::operator()(cplx z) const {
    cplx acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + *it;
    return acc;
}

std::pair<cplx, cplx> ComplexPoly::eval_with_derivative(cplx z) const {
    cplx v = 0.0, dv = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
        dv = dv * z + v;
        v = v * z + *it;
    }
    return {v, dv};
}

ComplexPoly ComplexPoly::derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<cplx> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * static_cast<double>(k);
    return ComplexPoly(std::move(d));
}

ComplexPoly ComplexPoly::conjugate_coefficients() const {
    std::vector<cplx> d(c_.size());
    std::transform(c_.begin(), c_.end(), d.begin(), [](cplx c) { return std::conj(c); });
    return ComplexPoly(std::move(d));
}

ComplexPoly ComplexPoly::shifted(cplx w) const {
    std::vector<cplx> d = c_;
    if (d.empty()) d.push_back(0.0);
    d[0] -= w;
    return ComplexPoly(std::move(d));
}

ComplexPoly ComplexPoly::operator*(const ComplexPoly& o) const {
    if (c_.empty() || o.c_.empty()) return {};
    std::vector<cplx> d(c_.size() + o.c_.size() - 1, 0.0);
    for (std::size_t a = 0; a < c_.size(); ++a)
        for (std::size_t b = 0; b < o.c_.size(); ++b) d[a + b] += c_[a] * o.c_[b];
    return ComplexPoly(std::move(d));
}

ComplexPoly ComplexPoly::compose(const ComplexPoly& inner) const {
    ComplexPoly acc;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
        acc = acc * inner;
        std::vector<cplx> d = acc.c_;
        if (d.empty()) d.push_back(0.0);
        d[0] += *it;
        acc = ComplexPoly(std::move(d));
    }
    return acc;
}

double ComplexPoly::escape_radius() const {
    if (degree() < 1) throw PreconditionViolation("escape radius needs degree >= 1");
    double s = 0.0;
    for (cplx c : c_) s += std::abs(c);
    return 2.0 * std::max(1.0, s / std::abs(leading()));
}

QPolynomial::QPolynomial(std::vector<Quaternion> coeffs) : c_(std::move(coeffs)) {
    while (!c_.empty() && c_.back() == Quaternion(0.0)) c_.pop_back();
}

QPolynomial QPolynomial::monomial(int n, const Quaternion& c) {
    if (n < 0) throw PreconditionViolation("monomial degree must be >= 0");
    std::vector<Quaternion> v(static_cast<std::size_t>(n) + 1);
    v.back() = c;
    return QPolynomial(std::move(v));
}

QPolynomial QPolynomial::from_real(std::span<const double> coeffs) {
    std::vector<Quaternion> v(coeffs.begin(), coeffs.end());
    return QPolynomial(std::move(v));
}

bool QPolynomial::has_real_coefficients(double tol) const { return max_imaginary() <= tol; }

double QPolynomial::max_imaginary() const {
    double m = 0.0;
    for (const auto& c : c_) m = std::max(m, c.im_norm());
    return m;
}

double QPolynomial::max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& c : c_) m = std::max(m, c.norm());
    return m;
}

Quaternion QPolynomial::operator()(const Quaternion& q) const {
    // sum q^n a_n = a_0 + q(a_1 + q(a_2 + ...)).
    Quaternion acc(0.0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = q * acc + *it;
    return acc;
}

QPolynomial QPolynomial::operator+(const QPolynomial& o) const {
    std::vector<Quaternion> v(std::max(c_.size(), o.c_.size()));
    for (std::size_t k = 0; k < c_.size(); ++k) v[k] += c_[k];
    for (std::size_t k = 0; k < o.c_.size(); ++k) v[k] += o.c_[k];
    return QPolynomial(std::move(v));
}

QPolynomial QPolynomial::operator-(const QPolynomial& o) const {
    std::vector<Quaternion> v(std::max(c_.size(), o.c_.size()));
    for (std::size_t k = 0; k < c_.size(); ++k) v[k] += c_[k];
    for (std::size_t k = 0; k < o.c_.size(); ++k) v[k] -= o.c_[k];
    return QPolynomial(std::move(v));
}

Quaternion eval(const QPolynomial& p, const Quaternion& q) { return p(q); }

QPolynomial star_mul(const QPolynomial& f, const QPolynomial& g) {
    if (f.is_zero() || g.is_zero()) return {};
    const auto& a = f.coeffs();
    const auto& b = g.coeffs();
    std::vector<Quaternion> c(a.size() + b.size() - 1);
    for (std::size_t j = 0; j < a.size(); ++j)
        for (std::size_t k = 0; k < b.size(); ++k) c[j + k] += a[j] * b[k];
    return QPolynomial(std::move(c));
}

QPolynomial conj(const QPolynomial& f) {
    std::vector<Quaternion> c(f.coeffs().size());
    std::transform(f.coeffs().begin(), f.coeffs().end(), c.begin(),
                   [](const Quaternion& a) { return a.conj(); });
    return QPolynomial(std::move(c));
}

QPolynomial symmetrize(const QPolynomial& f) { return star_mul(conj(f), f); }

QPolynomial real_part(const QPolynomial& f) {
    std::vector<Quaternion> c;
    c.reserve(f.coeffs().size());
    for (const auto& a : f.coeffs()) c.emplace_back(a.w);
    return QPolynomial(std::move(c));
}

Quaternion star_conjugation_point(const QPolynomial& f, const Quaternion& q) {
    const Quaternion v = f(q);
    return v.inverse() * q * v;
}

QPolynomial star_pow(const QPolynomial& w, int n) {
    if (n < 0) throw PreconditionViolation("star power must be >= 0");
    QPolynomial acc = QPolynomial::constant(Quaternion(1.0));
    for (int k = 0; k < n; ++k) acc = star_mul(acc, w);
    return acc;
}

QPolynomial bullet_compose(const QPolynomial& g, const QPolynomial& w) {
    QPolynomial acc;
    QPolynomial power = QPolynomial::constant(Quaternion(1.0));
    const auto& a = g.coeffs();
    for (std::size_t n = 0; n < a.size(); ++n) {
        if (n > 0) power = star_mul(power, w);
        acc = acc + star_mul(power, QPolynomial::constant(a[n]));
    }
    return acc;
}

QPolynomial bullet_pow(const QPolynomial& p, int n) {
    if (n < 0) throw PreconditionViolation("bullet power must be >= 0");
    QPolynomial acc = QPolynomial::identity();
    for (int k = 0; k < n; ++k) acc = bullet_compose(p, acc);
    return acc;
}

QPolynomial slice_derivative(const QPolynomial& f) {
    const auto& a = f.coeffs();
    if (a.size() <= 1) return {};
    std::vector<Quaternion> d(a.size() - 1);
    for (std::size_t n = 1; n < a.size(); ++n) d[n - 1] = a[n] * static_cast<double>(n);
    return QPolynomial(std::move(d));
}

ComplexPoly restrict_to_slice(const QPolynomial& f, const ImaginaryUnit& unit) {
    const double tol = numeric_policy().slice_tol;
    std::vector<cplx> c;
    c.reserve(f.coeffs().size());
    for (std::size_t k = 0; k < f.coeffs().size(); ++k) {
        const auto& a = f.coeffs()[k];
        const double off = slice_distance(a, unit);
        if (off > tol) throw CoefficientOffSlice(k, off);
        c.push_back(slice_coordinates(a, unit));
    }
    return ComplexPoly(std::move(c));
}

QPolynomial lift_from_slice(const ComplexPoly& p, const ImaginaryUnit& unit) {
    std::vector<Quaternion> c;
    c.reserve(p.coeffs().size());
    for (cplx a : p.coeffs()) c.push_back(unit.embed(a));
    return QPolynomial(std::move(c));
}

QPolynomial transport_coefficients(const QPolynomial& f, const ImaginaryUnit& from,
                                   const ImaginaryUnit& to) {
    return lift_from_slice(restrict_to_slice(f, from), to);
}

std::vector<cplx> critical_points_slice(const QPolynomial& f, const ImaginaryUnit& unit) {
    const ComplexPoly d = restrict_to_slice(f, unit).derivative();
    std::vector<cplx> out;
    if (d.degree() < 1) return out;
    for (const auto& r : solve_poly_fiber(d, 0.0))
        for (int m = 0; m < r.multiplicity; ++m) out.push_back(r.z);
    return out;
}

}  // namespace qbrolin
