#include "qbrolin/delta_star.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qbrolin/complex_dyn.hpp"
#include "qbrolin/errors.hpp"
#include "qbrolin/numeric_policy.hpp"
#include "qbrolin/parallel.hpp"

namespace qbrolin {

SliceFunction gaussian_bump(cplx center, double width) {
    if (!(width > 0.0)) throw PreconditionViolation("bump width must be > 0");
    const double s = 1.0 / (2.0 * width * width);
    return [center, s](cplx z) { return std::exp(-std::norm(z - center) * s); };
}

GridField slice_laplacian(const GridField& f, bool strict) {
    const SliceGrid& g = f.grid;
    GridField out(g);
    const double scale = 0.25 / (g.h() * g.h());
    parallel_for(static_cast<std::size_t>(g.ny()), [&](std::size_t row) {
        const int iy = static_cast<int>(row);
        for (int ix = 0; ix < g.nx(); ++ix) {
            const std::size_t idx = g.index(ix, iy);
            if (ix == 0 || iy == 0 || ix == g.nx() - 1 || iy == g.ny() - 1 || f.mask[idx]) {
                out.mask[idx] = 1;
                continue;
            }
            const bool touches = f.masked(ix - 1, iy) || f.masked(ix + 1, iy) || f.masked(ix, iy - 1) ||
                                 f.masked(ix, iy + 1);
            if (touches) {
                if (strict)
                    throw SingularNode("stencil at node (" + std::to_string(ix) + ", " +
                                       std::to_string(iy) + ") touches a masked node");
                out.mask[idx] = 1;
                continue;
            }
            out.values[idx] = scale * (f.at(ix - 1, iy) + f.at(ix + 1, iy) + f.at(ix, iy - 1) +
                                       f.at(ix, iy + 1) - 4.0 * f.at(ix, iy));
        }
    });
    return out;
}

KernelCheck log_potential_pairing(const ComplexPoly& P, const SliceFunction& bump, const SliceGrid& grid) {
    if (P.degree() < 1) throw PreconditionViolation("log potential needs a nonconstant polynomial");
    const auto roots = solve_fiber(P, 0.0);
    const double h = grid.h();
    const double log_lead = std::log(std::abs(P.leading()));

    KernelCheck out;
    for (const auto& r : roots) {
        const cplx z = r.z;
        if (z.real() < grid.alpha_min() + 3 * h || z.real() > grid.alpha_max() - 3 * h ||
            z.imag() < grid.beta_min() + 3 * h || z.imag() > grid.beta_max() - 3 * h)
            throw PreconditionViolation("zeros must lie in the grid interior");
        out.expected += 0.5 * r.multiplicity * bump(z);
    }
    for (std::size_t a = 0; a < roots.size(); ++a)
        for (std::size_t b = a + 1; b < roots.size(); ++b)
            if (std::max(std::abs(roots[a].z.real() - roots[b].z.real()),
                         std::abs(roots[a].z.imag() - roots[b].z.imag())) <= 4 * h)
                throw PreconditionViolation("zeros closer than four cells; refine the grid");

    auto u = [&](cplx z) {
        double s = log_lead;
        for (const auto& r : roots) s += r.multiplicity * std::log(std::abs(z - r.z));
        return s;
    };
    auto masked = [&](int ix, int iy) {
        const cplx z = grid.node(ix, iy);
        for (const auto& r : roots)
            if (std::abs(z.real() - r.z.real()) <= h * (1 + 1e-12) &&
                std::abs(z.imag() - r.z.imag()) <= h * (1 + 1e-12))
                return true;
        return false;
    };
    auto in_patch = [&](int ix, int iy) {
        return masked(ix, iy) || masked(ix - 1, iy) || masked(ix + 1, iy) || masked(ix, iy - 1) ||
               masked(ix, iy + 1);
    };
    auto nearest_zero = [&](cplx z) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < roots.size(); ++k)
            if (std::abs(z - roots[k].z) < std::abs(z - roots[best].z)) best = k;
        return best;
    };

    struct RowSum {
        double regular = 0.0;
        std::vector<double> flux;
    };
    std::vector<RowSum> rows(static_cast<std::size_t>(grid.ny()));
    parallel_for(rows.size(), [&](std::size_t row) {
        const int iy = static_cast<int>(row);
        RowSum& acc = rows[row];
        acc.flux.assign(roots.size(), 0.0);
        if (iy == 0 || iy == grid.ny() - 1) return;
        for (int ix = 1; ix < grid.nx() - 1; ++ix) {
            const cplx z = grid.node(ix, iy);
            if (masked(ix, iy)) continue;
            const int nb[4][2] = {{ix - 1, iy}, {ix + 1, iy}, {ix, iy - 1}, {ix, iy + 1}};
            const bool ring = in_patch(ix, iy);
            if (!ring) {
                double s = -4.0 * u(z);
                for (const auto& q : nb) s += u(grid.node(q[0], q[1]));
                acc.regular += s * bump(z);
            } else {
                const double uc = u(z);
                const std::size_t k = nearest_zero(z);
                for (const auto& q : nb)
                    if (!in_patch(q[0], q[1])) acc.flux[k] += u(grid.node(q[0], q[1])) - uc;
            }
        }
    });

    // (1/4) stencil / h^2 times the node area h^2, over the area element pi.
    const double c = 0.25 / std::numbers::pi;
    double total = 0.0;
    std::vector<double> flux(roots.size(), 0.0);
    for (const auto& r : rows) {
        total += c * r.regular;
        for (std::size_t k = 0; k < roots.size(); ++k) flux[k] += r.flux[k];
    }
    for (std::size_t k = 0; k < roots.size(); ++k) total += c * flux[k] * bump(roots[k].z);
    out.computed = total;
    return out;
}

KernelCheck fundamental_solution_check(double a, const SliceFunction& bump, const SliceGrid& grid) {
    return log_potential_pairing(ComplexPoly({-a, 1.0}), bump, grid);
}

KernelCheck sphere_kernel_check(const Quaternion& a, const SliceFunction& bump, const SliceGrid& grid) {
    if (!(a.im_norm() > 0.0)) throw PreconditionViolation("sphere kernel needs a non-real point");
    const QPolynomial lin({-a, Quaternion(1.0)});
    const ComplexPoly s = restrict_to_slice(real_part(symmetrize(lin)), ImaginaryUnit::i());
    return log_potential_pairing(s, bump, grid);
}

double refinement_order(const SliceFunction& u, const SliceFunction& lap_exact, cplx center,
                        double half_width, const std::vector<double>& spacings) {
    if (spacings.size() < 2) throw PreconditionViolation("refinement study needs two spacings");
    std::vector<double> lx, ly;
    for (double h : spacings) {
        const int m = static_cast<int>(std::round(half_width / h));
        double err = 0.0;
        for (int iy = -m; iy <= m; ++iy)
            for (int ix = -m; ix <= m; ++ix) {
                const cplx z = center + cplx(ix * h, iy * h);
                const double l = 0.25 *
                                 (u(z + cplx(h, 0)) + u(z - cplx(h, 0)) + u(z + cplx(0, h)) +
                                  u(z - cplx(0, h)) - 4.0 * u(z)) /
                                 (h * h);
                err = std::max(err, std::abs(l - lap_exact(z)));
            }
        lx.push_back(std::log(h));
        ly.push_back(std::log(err));
    }
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sx += lx[k];
        sy += ly[k];
        sxx += lx[k] * lx[k];
        sxy += lx[k] * ly[k];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

DensityRaster measure_from_green(const QPolynomial& p, int n, const SliceGrid& grid, const ImaginaryUnit& unit) {
    if (!p.has_real_coefficients(numeric_policy().slice_tol))
        throw PreconditionViolation("measure_from_green needs real coefficients");
    const ComplexPoly pc = restrict_to_slice(p, unit);
    if (pc.degree() < 2) throw PreconditionViolation("measure_from_green needs degree >= 2");
    const GreenField g = green_raster(pc, grid, n);
    GridField lap = slice_laplacian(g.field);

    DensityRaster out;
    const double area = grid.h() * grid.h();
    double positive = 0.0, negative = 0.0;
    for (std::size_t i = 0; i < lap.values.size(); ++i) {
        if (lap.mask[i]) {
            lap.values[i] = 0.0;
            continue;
        }
        const double dens = 2.0 * lap.values[i] / std::numbers::pi;
        if (dens < 0.0) {
            negative -= dens * area;
            lap.values[i] = 0.0;
        } else {
            positive += dens * area;
            lap.values[i] = dens;
        }
    }
    out.density = std::move(lap);
    out.total_mass = positive;
    out.clamped_mass = negative;
    if (negative > numeric_policy().clamp_fail_fraction * positive)
        throw ClampMassExceeded("clamped mass " + std::to_string(negative) + " exceeds " +
                                std::to_string(numeric_policy().clamp_fail_fraction) + " of total " +
                                std::to_string(positive));
    return out;
}

EmpiricalMeasure raster_to_measure(const DensityRaster& r) {
    const SliceGrid& g = r.density.grid;
    const double area = g.h() * g.h();
    std::vector<AtomicMass> atoms;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double w = r.density.values[i] * area;
        if (!(w > 0.0)) continue;
        const cplx z = g.node(i);
        atoms.push_back(z.imag() == 0.0 ? AtomicMass::point(z.real(), w)
                                        : AtomicMass::sphere(z.real(), std::abs(z.imag()), w));
    }
    nlohmann::json meta = {{"construction", "raster"}, {"h", g.h()}, {"clamped_mass", r.clamped_mass}};
    return EmpiricalMeasure(std::move(atoms), std::move(meta));
}

}  // namespace qbrolin
