#include "qbrolin/grid.hpp"

#include <cmath>

#include "qbrolin/errors.hpp"

namespace qbrolin {

SliceGrid::SliceGrid(double alpha_min, double alpha_max, double beta_min, double beta_max,
                     double h)
    : a0_(alpha_min), b0_(beta_min), h_(h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw PreconditionViolation("grid spacing must be > 0");
    if (!(alpha_max > alpha_min) || !(beta_max > beta_min))
        throw PreconditionViolation("grid bounds must have positive extent");
    const double nx = std::round((alpha_max - alpha_min) / h) + 1.0;
    const double ny = std::round((beta_max - beta_min) / h) + 1.0;
    if (nx < 3 || ny < 3 || nx * ny > 1e9) throw PreconditionViolation("grid node count out of range");
    nx_ = static_cast<int>(nx);
    ny_ = static_cast<int>(ny);
}

SliceGrid SliceGrid::centered(cplx center, double half_width, double h) {
    return SliceGrid(center.real() - half_width, center.real() + half_width,
                     center.imag() - half_width, center.imag() + half_width, h);
}

}  // namespace qbrolin
