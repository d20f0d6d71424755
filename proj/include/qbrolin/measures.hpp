#pragma once

// Finite atomic measures on H whose atoms are real points or whole 2-spheres
// S_{alpha + I rho}. Every measure here is axially symmetric, so sphere atoms
// carry no orientation.

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qbrolin/qpolynomial.hpp"

namespace qbrolin {

enum class AtomKind { Point, Sphere };

struct AtomicMass {
    AtomKind kind = AtomKind::Point;
    double alpha = 0.0;
    double rho = 0.0;  // 0 for points, > 0 for spheres
    double weight = 0.0;

    static AtomicMass point(double r, double w);
    static AtomicMass sphere(double alpha, double rho, double w);
    /// Point for |Im z| <= tol * max(1, |z|), else the sphere through z.
    static AtomicMass from_complex(cplx z, double w, double tol);
};

class EmpiricalMeasure {
public:
    EmpiricalMeasure() = default;
    /// Validates every atom and sorts by (kind, alpha, rho, weight), which
    /// fixes the summation order of every fold over the measure.
    explicit EmpiricalMeasure(std::vector<AtomicMass> atoms, nlohmann::json meta = {});

    const std::vector<AtomicMass>& atoms() const { return atoms_; }
    const nlohmann::json& meta() const { return meta_; }
    nlohmann::json& meta() { return meta_; }
    std::size_t size() const { return atoms_.size(); }
    double total_mass() const;
    /// Mass carried by real-point atoms.
    double real_mass() const;
    EmpiricalMeasure scaled(double s) const;
    /// alpha * this + (1 - alpha) * other.
    EmpiricalMeasure mixed(const EmpiricalMeasure& other, double alpha) const;

private:
    std::vector<AtomicMass> atoms_;
    nlohmann::json meta_;
};

struct TestFunction {
    std::string id;
    std::function<double(const Quaternion&)> f;
    double support_radius = std::numeric_limits<double>::infinity();
    bool axial = false;  // depends on q only through (Re q, |Im q|)

    double operator()(const Quaternion& q) const { return f(q); }
};

/// Twelve fixed functions of (x, rho) = (Re q, |Im q|): x, rho, x^2, x rho,
/// rho^2, x^3, x^2 rho, rho^3, exp(-|q|^2 / 2), exp(-|q - 1|^2 / 2), |q|^2,
/// cos x.
const std::vector<TestFunction>& standard_panel();
const TestFunction& panel_function(const std::string& id);

/// Atoms of a fiber of real-coefficient data on the reference slice C_i:
/// real roots become points with weight scale * mult, conjugate pairs
/// become one sphere with weight 2 * scale * mult.
std::vector<AtomicMass> classify_fiber(const std::vector<std::pair<cplx, int>>& roots, double scale);

/// nu_n for the target a: p real-coefficient with degree >= 2.
EmpiricalMeasure brolin_pullback(const QPolynomial& p, double a, int n);

double pair(const EmpiricalMeasure& m, const TestFunction& f, const SphereQuadrature& quad);
double weak_distance(const EmpiricalMeasure& m1, const EmpiricalMeasure& m2,
                     const std::vector<TestFunction>& panel, const SphereQuadrature& quad);
/// Per-function differences, in panel order.
std::vector<double> panel_differences(const EmpiricalMeasure& m1, const EmpiricalMeasure& m2,
                                      const std::vector<TestFunction>& panel,
                                      const SphereQuadrature& quad);

EmpiricalMeasure pushforward(const QPolynomial& p, const EmpiricalMeasure& m);
/// Total mass becomes d times the input mass.
EmpiricalMeasure pullback(const QPolynomial& p, const EmpiricalMeasure& m);

/// The measure mu_I on C_I: spheres split into w/2 at alpha +- i rho.
std::vector<std::pair<cplx, double>> slice_marginal(const EmpiricalMeasure& m, const ImaginaryUnit& unit);

}  // namespace qbrolin
