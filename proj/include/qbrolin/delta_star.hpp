#pragma once

// Discrete slice Laplacian Delta_I = (1/4)(d^2/dalpha^2 + d^2/dbeta^2) on
// slice rasters, checks of its fundamental solutions, and equilibrium
// densities recovered as Delta_* of Green's functions.
//
// Slice integrals use the area element dA / pi, under which
// Delta_*(2 log|q|) = delta_0 and Delta_* log|q - a| = delta_a / 2.

#include <functional>
#include <vector>

#include "qbrolin/grid.hpp"
#include "qbrolin/measures.hpp"
#include "qbrolin/qpolynomial.hpp"

namespace qbrolin {

using SliceFunction = std::function<double(cplx)>;

/// exp(-|z - c|^2 / (2 width^2)).
SliceFunction gaussian_bump(cplx center, double width = 1.0);

/// (1/4) five-point stencil over h^2. The boundary ring is masked in the
/// output. With strict = true a stencil touching a masked input node throws
/// SingularNode; otherwise that output node is masked too.
GridField slice_laplacian(const GridField& f, bool strict = true);

struct KernelCheck {
    double computed = 0.0;
    double expected = 0.0;
};

/// Pairs Delta_I log|P| with a bump over the grid: nodes within one cell of a
/// zero of P are masked, and the mass of each masked patch is the discrete
/// flux through its boundary, attributed to the bump value at the zero.
/// expected = sum over zeros of mult * bump(zero) / 2.
KernelCheck log_potential_pairing(const ComplexPoly& P, const SliceFunction& bump, const SliceGrid& grid);

/// Delta_* log|q - a| paired with bump; expected bump(a) / 2.
KernelCheck fundamental_solution_check(double a, const SliceFunction& bump, const SliceGrid& grid);

/// Delta_I log|(q - a)^s| paired with bump for non-real a; expected
/// bump(alpha + i beta) / 2 + bump(alpha - i beta) / 2.
KernelCheck sphere_kernel_check(const Quaternion& a, const SliceFunction& bump, const SliceGrid& grid);

/// Least-squares slope of log(max |Delta_h u - lap_exact|) against log h over
/// the given spacings, on the square [center +- half_width]^2.
double refinement_order(const SliceFunction& u, const SliceFunction& lap_exact, cplx center,
                        double half_width, const std::vector<double>& spacings);

struct DensityRaster {
    GridField density;  // per unit plain area
    double total_mass = 0.0;
    double clamped_mass = 0.0;  // |negative mass| set to zero
};

/// Density 2 Delta_I G_n / pi of the equilibrium measure on C_unit; p must
/// have real coefficients. Throws ClampMassExceeded if the clamped mass is
/// above the policy fraction of the total.
DensityRaster measure_from_green(const QPolynomial& p, int n, const SliceGrid& grid,
                                 const ImaginaryUnit& unit = ImaginaryUnit::i());

/// Node masses density * h^2 as atoms: beta = 0 nodes are points, others are
/// spheres through (alpha, |beta|).
EmpiricalMeasure raster_to_measure(const DensityRaster& r);

}  // namespace qbrolin
