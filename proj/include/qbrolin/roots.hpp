#pragma once

// All-roots solver for fibers {z : F(z) = w} of a degree-d holomorphic
// polynomial map F. Aberth-Ehrlich simultaneous iteration from a circle of
// initial guesses, Newton polish, clustering into multiplicities and a
// residual check. Degrees 1 and 2 are solved in closed form and then go
// through the same polish/cluster/verify path.
//
// A map type M must provide
//   int degree() const;
//   std::pair<cplx, cplx> value_and_derivative(cplx z) const;
//   double eval_scale(cplx z) const;    // magnitude bound on the summed terms
//   cplx root_center() const;           // centroid guess of the roots
//   double root_radius(cplx w) const;   // radius enclosing all roots of F = w
// and, for the closed forms, `std::span<const cplx> coefficients() const`
// returning an empty span when no coefficient list is available.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qbrolin/errors.hpp"
#include "qbrolin/numeric_policy.hpp"
#include "qbrolin/qpolynomial.hpp"

namespace qbrolin {

struct Root {
    cplx z;
    int multiplicity = 1;
};

/// Adapter presenting a ComplexPoly as a fiber map.
class PolyMap {
public:
    explicit PolyMap(const ComplexPoly& p) : p_(&p) {}
    int degree() const { return p_->degree(); }
    std::pair<cplx, cplx> value_and_derivative(cplx z) const { return p_->eval_with_derivative(z); }
    double eval_scale(cplx z) const {
        const double r = std::abs(z);
        double acc = 0.0;
        for (auto it = p_->coeffs().rbegin(); it != p_->coeffs().rend(); ++it)
            acc = acc * r + std::abs(*it);
        return acc;
    }
    cplx root_center() const {
        const auto& c = p_->coeffs();
        const int d = degree();
        return -c[static_cast<std::size_t>(d - 1)] / (static_cast<double>(d) * c.back());
    }
    double root_radius(cplx w) const {
        const auto& c = p_->coeffs();
        const double lead = std::abs(c.back());
        double m = std::abs(c[0] - w) / lead;
        for (std::size_t k = 1; k + 1 < c.size(); ++k) m = std::max(m, std::abs(c[k]) / lead);
        return 1.0 + m;
    }
    std::span<const cplx> coefficients() const { return p_->coeffs(); }

private:
    const ComplexPoly* p_;
};

namespace detail {

inline std::vector<Root> cluster_roots(std::vector<cplx> zs, double rel) {
    std::sort(zs.begin(), zs.end(), [](cplx a, cplx b) {
        return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    std::vector<Root> out;
    std::vector<bool> used(zs.size(), false);
    for (std::size_t a = 0; a < zs.size(); ++a) {
        if (used[a]) continue;
        const double tol = rel * std::max(1.0, std::abs(zs[a]));
        cplx sum = zs[a];
        int m = 1;
        used[a] = true;
        for (std::size_t b = a + 1; b < zs.size() && zs[b].real() - zs[a].real() <= tol; ++b) {
            if (!used[b] && std::abs(zs[b] - zs[a]) <= tol) {
                used[b] = true;
                sum += zs[b];
                ++m;
            }
        }
        out.push_back({sum / static_cast<double>(m), m});
    }
    return out;
}

inline std::vector<cplx> closed_form(std::span<const cplx> c, cplx w) {
    if (c.size() == 2) return {-(c[0] - w) / c[1]};
    const cplx a = c[2], b = c[1], cc = c[0] - w;
    const cplx s = std::sqrt(b * b - 4.0 * a * cc);
    const cplx q = (std::real(std::conj(b) * s) >= 0.0) ? -0.5 * (b + s) : -0.5 * (b - s);
    if (q == cplx(0.0)) return {-b / (2.0 * a), -b / (2.0 * a)};
    return {q / a, cc / q};
}

}  // namespace detail

template <class Map>
std::vector<Root> solve_map_fiber(const Map& f, cplx w) {
    const auto& pol = numeric_policy();
    const int d = f.degree();
    if (d < 1) throw PreconditionViolation("fiber solve needs degree >= 1");

    std::vector<cplx> z;
    const auto coeffs = f.coefficients();
    if (d <= 2 && !coeffs.empty()) {
        z = detail::closed_form(coeffs, w);
    } else {
        const cplx center = f.root_center();
        const double radius = f.root_radius(w);
        z.resize(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k)
            z[k] = center + std::polar(radius, 2.0 * std::numbers::pi * k / d + 0.4);

        std::vector<bool> done(static_cast<std::size_t>(d), false);
        for (int it = 0; it < pol.aberth_max_iter; ++it) {
            int active = 0;
            for (int k = 0; k < d; ++k) {
                if (done[k]) continue;
                auto [v, dv] = f.value_and_derivative(z[k]);
                v -= w;
                if (v == cplx(0.0)) {
                    done[k] = true;
                    continue;
                }
                const cplx ratio = v / dv;
                cplx s = 0.0;
                for (int j = 0; j < d; ++j)
                    if (j != k) s += 1.0 / (z[k] - z[j]);
                cplx step = ratio / (1.0 - ratio * s);
                if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) step = ratio;
                z[k] -= step;
                if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z[k])))
                    done[k] = true;
                else
                    ++active;
            }
            if (active == 0) break;
        }
    }

    // Newton polish on isolated roots.
    for (auto& r : z) {
        for (int it = 0; it < 3; ++it) {
            auto [v, dv] = f.value_and_derivative(r);
            v -= w;
            if (std::abs(dv) < 1e-8 * std::max(1.0, f.eval_scale(r)) || v == cplx(0.0)) break;
            const cplx step = v / dv;
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
            r -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(r))) break;
        }
    }

    auto roots = detail::cluster_roots(std::move(z), pol.cluster_rel);
    double worst = 0.0;
    bool ok = true;
    for (const auto& r : roots) {
        const double res = std::abs(f.value_and_derivative(r.z).first - w);
        const double tol = std::max(pol.residual_rel * (1.0 + std::abs(w)),
                                    64.0 * std::numeric_limits<double>::epsilon() *
                                        (f.eval_scale(r.z) + std::abs(w)));
        worst = std::max(worst, res);
        if (!(res <= tol)) ok = false;
    }
    if (!ok)
        throw SolverFailure("fiber residual check failed, worst residual " + std::to_string(worst),
                            worst);
    return roots;
}

/// Fiber of w under a complex polynomial.
inline std::vector<Root> solve_poly_fiber(const ComplexPoly& p, cplx w) {
    return solve_map_fiber(PolyMap(p), w);
}

}  // namespace qbrolin
