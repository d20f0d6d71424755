#pragma once

// Polynomials f(q) = sum_n q^n a_n with quaternionic RIGHT coefficients, and
// the regular-product algebra on them: star product, slice conjugate,
// symmetrization, slice derivative, bullet composition, slice restriction.

#include <span>
#include <vector>

#include "qbrolin/quaternion.hpp"

namespace qbrolin {

/// Complex polynomial, ascending coefficients.
class ComplexPoly {
public:
    ComplexPoly() = default;
    explicit ComplexPoly(std::vector<cplx> coeffs);

    const std::vector<cplx>& coeffs() const { return c_; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }
    cplx leading() const { return c_.back(); }
    bool has_real_coefficients(double tol = 0.0) const;

    cplx operator()(cplx z) const;
    /// Value and first derivative in one Horner pass.
    std::pair<cplx, cplx> eval_with_derivative(cplx z) const;

    ComplexPoly derivative() const;
    /// Coefficient-wise complex conjugate (z -> conj(P(conj z))).
    ComplexPoly conjugate_coefficients() const;
    /// P - w.
    ComplexPoly shifted(cplx w) const;
    /// P(Q(z)), ordinary composition.
    ComplexPoly compose(const ComplexPoly& inner) const;
    ComplexPoly operator*(const ComplexPoly& o) const;

    /// Escape radius R = 2 max(1, sum |c_k| / |c_d|).
    double escape_radius() const;

private:
    std::vector<cplx> c_;
};

class QPolynomial {
public:
    QPolynomial() = default;
    /// Trailing EXACT zeros are trimmed; near-zero leading terms are kept.
    explicit QPolynomial(std::vector<Quaternion> coeffs);
    static QPolynomial identity() { return QPolynomial({Quaternion(0), Quaternion(1)}); }
    static QPolynomial constant(const Quaternion& c) { return QPolynomial({c}); }
    static QPolynomial monomial(int n, const Quaternion& c);
    /// Real-coefficient polynomial from ascending real coefficients.
    static QPolynomial from_real(std::span<const double> coeffs);

    const std::vector<Quaternion>& coeffs() const { return c_; }
    /// -1 for the zero polynomial.
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }
    const Quaternion& coeff(int n) const { return c_.at(static_cast<std::size_t>(n)); }

    /// max |Im a_n| <= tol.
    bool has_real_coefficients(double tol = 0.0) const;
    /// Largest imaginary magnitude over coefficients.
    double max_imaginary() const;
    double max_abs_coefficient() const;

    /// f(q) = sum q^n a_n by Horner: powers of q multiply from the left.
    Quaternion operator()(const Quaternion& q) const;

    QPolynomial operator+(const QPolynomial& o) const;
    QPolynomial operator-(const QPolynomial& o) const;
    bool operator==(const QPolynomial&) const = default;

private:
    std::vector<Quaternion> c_;
};

Quaternion eval(const QPolynomial& p, const Quaternion& q);

/// Regular (star) product: coefficient convolution with order a_j b_k.
QPolynomial star_mul(const QPolynomial& f, const QPolynomial& g);
/// Slice conjugate: coefficient-wise quaternion conjugation.
QPolynomial conj(const QPolynomial& f);
/// f^s = f^c * f, computed by convolution; coefficients are real up to
/// round-off.
QPolynomial symmetrize(const QPolynomial& f);
/// Drops imaginary parts. Used after a realness check on f^s.
QPolynomial real_part(const QPolynomial& f);
/// T_f(q) = f(q)^-1 q f(q). Throws ZeroDivisor if f(q) = 0.
Quaternion star_conjugation_point(const QPolynomial& f, const Quaternion& q);
/// n-fold star power, w^{*0} = 1.
QPolynomial star_pow(const QPolynomial& w, int n);
/// (g . w)(q) = sum_n w^{*n} a_n, a_n the coefficients of g.
QPolynomial bullet_compose(const QPolynomial& g, const QPolynomial& w);
/// n-fold bullet self-composition, p^{.0} = q.
QPolynomial bullet_pow(const QPolynomial& p, int n);
QPolynomial slice_derivative(const QPolynomial& f);

/// Restriction to C_I identified with C through a + I b <-> a + i b.
/// Throws CoefficientOffSlice when a coefficient is further than the policy
/// slice tolerance from C_I.
ComplexPoly restrict_to_slice(const QPolynomial& f, const ImaginaryUnit& unit);
/// Inverse of restrict_to_slice: complex coefficient x + i y becomes x + I y.
QPolynomial lift_from_slice(const ComplexPoly& p, const ImaginaryUnit& unit);
/// Rewrites coefficients a_k = x_k + I y_k (I = from) as x_k + J y_k (J = to).
QPolynomial transport_coefficients(const QPolynomial& f, const ImaginaryUnit& from,
                                   const ImaginaryUnit& to);

/// Roots of the restricted slice derivative on C_I, with multiplicity.
std::vector<cplx> critical_points_slice(const QPolynomial& f, const ImaginaryUnit& unit);

}  // namespace qbrolin
