#pragma once

// Dynamics of one complex polynomial on a slice: iteration with an overflow
// safe escape ledger, fibers, preimage trees, Green's functions, filled Julia
// masks and exceptional-point screening.

#include <cstdint>
#include <vector>

#include "qbrolin/grid.hpp"
#include "qbrolin/qpolynomial.hpp"
#include "qbrolin/roots.hpp"

namespace qbrolin {

struct EscapeParams {
    double radius = 2.0;
    int max_iter = 256;

    /// radius = p.escape_radius(); throws if max_iter < 1.
    static EscapeParams for_poly(const ComplexPoly& p, int max_iter = 256);
    /// Throws PreconditionViolation if radius is below p.escape_radius().
    void validate(const ComplexPoly& p) const;
};

/// p^n(z). While |z| stays below the ledger threshold `value` is the exact
/// floating iterate; beyond it only (log_modulus, direction) are tracked and
/// `value` is left infinite.
struct IterateResult {
    cplx value;
    double log_modulus = 0.0;  // log|p^n(z)|, -inf at an exact zero
    cplx direction{1.0, 0.0};  // p^n(z) / |p^n(z)|
    bool escaped = false;      // some iterate had modulus > R
    int escape_step = -1;      // first such step
    bool on_ledger = false;
};

IterateResult iterate(const ComplexPoly& p, cplx z, int n);
IterateResult iterate(const ComplexPoly& p, cplx z, int n, double radius);

std::vector<Root> solve_fiber(const ComplexPoly& p, cplx w);

struct PreimageNode {
    cplx point;
    int depth = 0;
    int multiplicity = 1;
};

/// All points of p^-n(a), counted with multiplicity, sorted by (Re, Im).
/// Throws BudgetExceeded if d^n > budget.
std::vector<PreimageNode> preimage_tree(const ComplexPoly& p, cplx a, int n, std::size_t budget);
std::vector<PreimageNode> preimage_tree(const ComplexPoly& p, cplx a, int n);

/// d^-n log+ |p^n(z)|.
double green_n(const ComplexPoly& p, cplx z, int n);

struct GreenField {
    GridField field;
    std::vector<int> n_used;
};

/// green_n on every node. Nodes of the filled Julia set (by escape test with
/// max_iter = n) are exactly 0.
GreenField green_raster(const ComplexPoly& p, const SliceGrid& grid, int n);

/// 1 where the orbit stays within R for max_iter steps.
std::vector<std::uint8_t> filled_julia_mask(const ComplexPoly& p, const SliceGrid& grid,
                                            const EscapeParams& esc);

/// Backward-orbit screening: true iff the union of p^-k(a), k <= depth,
/// has at most deg p distinct points.
bool is_exceptional(const ComplexPoly& p, cplx a, int depth);
bool is_exceptional(const ComplexPoly& p, cplx a);

}  // namespace qbrolin
