#pragma once

// Polynomials that do not preserve every slice. One-slice-preserving P
// (coefficients in one C_I, not all real) is handled through the symmetrized
// iterates g_n = (P^n)^s and the measure mu'. General coefficients go
// through bullet iterates h_n = (p^{.n})^s and the gap test.

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "qbrolin/measures.hpp"
#include "qbrolin/qpolynomial.hpp"
#include "qbrolin/quaternion.hpp"

namespace qbrolin {

struct OneSlicePolynomial {
    ComplexPoly base;     // P on C_I in the coordinate a + I b <-> a + i b
    ImaginaryUnit unit;
    bool has_nonreal_coefficient = false;

    /// The unit is taken from the first non-real coefficient. Throws
    /// CoefficientOffSlice if the coefficients span more than one slice and
    /// PreconditionViolation for degree < 2.
    static OneSlicePolynomial from_qpolynomial(const QPolynomial& p);
    QPolynomial to_qpolynomial() const { return lift_from_slice(base, unit); }
    int degree() const { return base.degree(); }
};

/// g_n = (P^n)^s with real coefficients and degree 2 d^n. Real P goes
/// through (P^n)^2 instead. Throws BudgetExceeded past the degree budget.
QPolynomial gn_build(const OneSlicePolynomial& p, int n);

/// g_n on the reference slice, evaluated as P^n(z) * conj(P^n)(z) without
/// expanding coefficients. Satisfies the fiber-map interface of roots.hpp.
class GnMap {
public:
    GnMap(const OneSlicePolynomial& p, int n);
    int degree() const { return degree_; }
    std::pair<cplx, cplx> value_and_derivative(cplx z) const;
    double eval_scale(cplx z) const;
    cplx root_center() const { return center_; }
    double root_radius(cplx w) const;
    std::span<const cplx> coefficients() const { return {}; }

private:
    ComplexPoly f_, g_;  // P and its coefficient conjugate
    int n_;
    int degree_;
    cplx center_;
    double radius_;
};

/// Fibers of a under g_n on the reference slice, classified into points
/// and spheres with weight 1 / (2 d^n) per root. Throws ExceptionalTarget
/// if a is exceptional for P or the fiber collapses to one point.
EmpiricalMeasure gn_pullback_measure(const OneSlicePolynomial& p, double a, int n);

/// A point alpha + unit * beta of H (beta may be negative).
struct TaggedAtom {
    double alpha = 0.0;
    double beta = 0.0;
    ImaginaryUnit unit;
    double weight = 0.0;
};

struct MuPrimeEstimate {
    EmpiricalMeasure measure;         // axially binned
    std::vector<TaggedAtom> tagged;   // before binning
};

/// Estimator of mu' = (1/8pi) int mu_{P(J)} dJ + (1/8pi) int mu_{P^c(J)} dJ:
/// for each quadrature unit J the coefficients are transported to C_J,
/// the depth-n Brolin pullback of a is taken for P(., J) and P^c(., J),
/// and the atoms are merged with weights w_J / (8 pi). Real P reduces to
/// brolin_pullback. Atoms are binned in (alpha, rho) at `bin_width` with
/// weighted centroids.
MuPrimeEstimate mu_prime_estimate_tagged(const OneSlicePolynomial& p, const SphereQuadrature& quad, int n,
                                         double a, double bin_width = 1.0 / 128);
EmpiricalMeasure mu_prime_estimate(const OneSlicePolynomial& p, const SphereQuadrature& quad, int n, double a,
                                   double bin_width = 1.0 / 128);

/// Axial binning of tagged atoms; `meta` gains a "binning" block.
EmpiricalMeasure axial_bin(const std::vector<TaggedAtom>& atoms, double bin_width, nlohmann::json meta);

struct GeneralIterate {
    QPolynomial h;       // (p^{.n})^s, real coefficients
    QPolynomial bullet;  // p^{.n}
    int n = 0;
    QPolynomial source;
};

/// Throws BudgetExceeded if 2 d^n exceeds the degree budget and
/// NumericalFailure if h_n is not real within 1e-10 of its coefficient scale.
GeneralIterate hn_build(const QPolynomial& p, int n);

/// m * 2^e, for values that overflow double.
struct ScaledComplex {
    cplx mantissa;
    long exponent = 0;

    double log_abs() const;
    /// log|value - a| for real a.
    double log_abs_minus(double a) const;
    /// The value as a double, infinite if out of range.
    cplx value() const;
};

/// Pointwise h_n on C_i: with p = P1 + P2 j (P1, P2 complex coefficient
/// polynomials), the bullet iterate is carried as its split values at z and
/// conj z, so h_n(z) = F1(z) conj(F1(conj z)) + F2(z) conj(F2(conj z)) costs
/// O(n d) per point. Since h_n has real coefficients, h_n(alpha + J beta) is
/// h_n(alpha + i beta) moved to C_J.
class HnEvaluator {
public:
    explicit HnEvaluator(const QPolynomial& p);
    /// h_1(z), ..., h_{n_max}(z).
    std::vector<ScaledComplex> values(cplx z, int n_max) const;
    Quaternion value(const Quaternion& q, int n) const;
    int degree() const { return static_cast<int>(u_.size()) - 1; }

private:
    std::vector<cplx> u_, v_;  // coefficient splitting a_k = u_k + v_k j
};

struct OrbitFiniteness {
    bool finite = false;
    int horizon = 0;
    std::size_t distinct = 0;
};

/// Heuristic membership in the exceptional set: {h_n(q0) : 1 <= n <= horizon}
/// has fewer than `horizon` distinct values after clustering.
OrbitFiniteness orbit_finite(const QPolynomial& p, const Quaternion& q0, int horizon);

struct GapResult {
    double gap = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0;  // probes on a fiber of a or b
    int horizon = 0;
    std::vector<double> finite_orbit_targets;  // targets flagged by the screen
};

/// max over probes of |d^-n log|h_n(q) - a| - d^-n log|h_n(q) - b||. Targets
/// a and b are screened with orbit_finite at `horizon`; a flagged target
/// throws ExceptionalTarget when `enforce_screen` is set and is otherwise
/// only listed in the result.
GapResult brolin3_gap(const QPolynomial& p, double a, double b, int n, const std::vector<Quaternion>& probes,
                      int horizon = 8, bool enforce_screen = true);

/// nx * ny probes alpha + J beta on a rectangle, J cycling through the
/// level-1 quadrature units.
std::vector<Quaternion> probe_grid(double alpha_min, double alpha_max, double beta_min, double beta_max, int nx,
                                   int ny);

}  // namespace qbrolin
