#include "qbrolin/complex_dyn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qbrolin/errors.hpp"
#include "qbrolin/numeric_policy.hpp"
#include "qbrolin/parallel.hpp"

namespace qbrolin {

namespace {

// Once the next iterate could exceed e^600 the iteration continues on
// (log|z|, z/|z|) only.
constexpr double kLedgerLog = 600.0;

bool complex_less(cplx a, cplx b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
}

}  // namespace

EscapeParams EscapeParams::for_poly(const ComplexPoly& p, int max_iter) {
    if (max_iter < 1) throw PreconditionViolation("max_iter must be >= 1");
    return {p.escape_radius(), max_iter};
}

void EscapeParams::validate(const ComplexPoly& p) const {
    if (max_iter < 1) throw PreconditionViolation("max_iter must be >= 1");
    if (!(radius >= p.escape_radius() * (1.0 - 1e-12)))
        throw PreconditionViolation("escape radius " + std::to_string(radius) +
                                    " is below the guaranteed bound " +
                                    std::to_string(p.escape_radius()));
}

IterateResult iterate(const ComplexPoly& p, cplx z, int n) {
    return iterate(p, z, n, p.degree() >= 1 ? p.escape_radius() : 0.0);
}

IterateResult iterate(const ComplexPoly& p, cplx z, int n, double radius) {
    if (n < 0) throw PreconditionViolation("iteration count must be >= 0");
    IterateResult r;
    const int d = p.degree();
    const auto& c = p.coeffs();
    double log_coeff_sum = 0.0;
    for (cplx a : c) log_coeff_sum += std::abs(a);
    log_coeff_sum = std::log(std::max(1.0, log_coeff_sum));
    cplx v = z;
    int k = 0;
    for (; k < n; ++k) {
        const double m = std::abs(v);
        if (d >= 1 && m > 1.0 && d * std::log(m) + log_coeff_sum > kLedgerLog) break;
        if (!r.escaped && std::abs(v) > radius) {
            r.escaped = true;
            r.escape_step = k;
        }
        v = p(v);
    }
    if (!r.escaped && std::abs(v) > radius && d >= 1) {
        r.escaped = true;
        r.escape_step = k;
    }
    if (k == n) {
        r.value = v;
        const double m = std::abs(v);
        r.log_modulus = std::log(m);
        r.direction = m > 0.0 ? v / m : cplx(1.0, 0.0);
        return r;
    }

    // Log ledger: p(z) = c_d z^d (1 + corr), corr = sum_{j<d} (c_j / c_d) z^(j-d).
    r.on_ledger = true;
    double L = std::log(std::abs(v));
    cplx u = v / std::abs(v);
    const cplx lead = c.back();
    const double log_lead = std::log(std::abs(lead));
    const cplx lead_dir = lead / std::abs(lead);
    for (; k < n; ++k) {
        const cplx inv = std::conj(u) * std::exp(-L);
        cplx corr = 0.0;
        for (int j = 0; j < d; ++j) corr = (corr + c[static_cast<std::size_t>(j)] / lead) * inv;
        const cplx one_corr = 1.0 + corr;
        const double log_one = 0.5 * std::log1p(2.0 * corr.real() + std::norm(corr));
        L = d * L + log_lead + log_one;
        cplx ud = 1.0;
        for (int j = 0; j < d; ++j) ud *= u;
        u = ud * lead_dir * (one_corr / std::abs(one_corr));
        u /= std::abs(u);
    }
    r.value = cplx(std::numeric_limits<double>::infinity(), 0.0);
    r.log_modulus = L;
    r.direction = u;
    return r;
}

std::vector<Root> solve_fiber(const ComplexPoly& p, cplx w) { return solve_poly_fiber(p, w); }

std::vector<PreimageNode> preimage_tree(const ComplexPoly& p, cplx a, int n) {
    return preimage_tree(p, a, n, numeric_policy().preimage_budget);
}

std::vector<PreimageNode> preimage_tree(const ComplexPoly& p, cplx a, int n, std::size_t budget) {
    if (n < 0) throw PreconditionViolation("depth must be >= 0");
    const int d = p.degree();
    if (d < 1) throw PreconditionViolation("preimage tree needs degree >= 1");
    double count = 1.0;
    for (int k = 0; k < n; ++k) count *= d;
    if (count > static_cast<double>(budget))
        throw BudgetExceeded("d^n = " + std::to_string(count) + " exceeds preimage budget " +
                             std::to_string(budget));

    std::vector<PreimageNode> level{{a, 0, 1}};
    for (int k = 1; k <= n; ++k) {
        std::vector<std::vector<Root>> fibers(level.size());
        parallel_for(level.size(), [&](std::size_t i) { fibers[i] = solve_fiber(p, level[i].point); });
        std::vector<PreimageNode> next;
        next.reserve(level.size() * static_cast<std::size_t>(d));
        for (std::size_t i = 0; i < level.size(); ++i)
            for (const auto& r : fibers[i])
                next.push_back({r.z, k, level[i].multiplicity * r.multiplicity});
        level = std::move(next);
    }
    std::sort(level.begin(), level.end(),
              [](const PreimageNode& x, const PreimageNode& y) { return complex_less(x.point, y.point); });
    return level;
}

double green_n(const ComplexPoly& p, cplx z, int n) {
    const int d = p.degree();
    if (d < 1) throw PreconditionViolation("green_n needs degree >= 1");
    const IterateResult r = iterate(p, z, n);
    if (!(r.log_modulus > 0.0)) return 0.0;
    return r.log_modulus * std::pow(static_cast<double>(d), -n);
}

GreenField green_raster(const ComplexPoly& p, const SliceGrid& grid, int n) {
    GreenField g{GridField(grid), std::vector<int>(grid.size(), n)};
    const double scale = std::pow(static_cast<double>(p.degree()), -n);
    parallel_for(static_cast<std::size_t>(grid.ny()), [&](std::size_t row) {
        const int iy = static_cast<int>(row);
        for (int ix = 0; ix < grid.nx(); ++ix) {
            const IterateResult r = iterate(p, grid.node(ix, iy), n);
            const std::size_t idx = grid.index(ix, iy);
            g.field.values[idx] = r.log_modulus > 0.0 ? r.log_modulus * scale : 0.0;
            g.n_used[idx] = r.escaped ? r.escape_step : n;
        }
    });
    return g;
}

std::vector<std::uint8_t> filled_julia_mask(const ComplexPoly& p, const SliceGrid& grid,
                                            const EscapeParams& esc) {
    esc.validate(p);
    std::vector<std::uint8_t> mask(grid.size(), 0);
    parallel_for(static_cast<std::size_t>(grid.ny()), [&](std::size_t row) {
        const int iy = static_cast<int>(row);
        for (int ix = 0; ix < grid.nx(); ++ix) {
            cplx z = grid.node(ix, iy);
            bool inside = true;
            for (int k = 0; k < esc.max_iter; ++k) {
                if (std::abs(z) > esc.radius) {
                    inside = false;
                    break;
                }
                z = p(z);
            }
            if (inside && std::abs(z) > esc.radius) inside = false;
            mask[grid.index(ix, iy)] = inside ? 1 : 0;
        }
    });
    return mask;
}

bool is_exceptional(const ComplexPoly& p, cplx a) {
    return is_exceptional(p, a, numeric_policy().exceptional_depth);
}

bool is_exceptional(const ComplexPoly& p, cplx a, int depth) {
    const int d = p.degree();
    if (d < 2) throw PreconditionViolation("exceptional screening needs degree >= 2");
    const double rel = numeric_policy().cluster_rel;
    std::vector<cplx> seen{a};
    auto known = [&](cplx z) {
        return std::any_of(seen.begin(), seen.end(), [&](cplx s) {
            return std::abs(s - z) <= rel * std::max(1.0, std::abs(z));
        });
    };
    std::vector<cplx> frontier{a};
    for (int k = 0; k < depth && !frontier.empty(); ++k) {
        std::vector<cplx> next;
        for (cplx w : frontier) {
            for (const auto& r : solve_fiber(p, w)) {
                if (known(r.z)) continue;
                seen.push_back(r.z);
                next.push_back(r.z);
                if (static_cast<int>(seen.size()) > d) return false;
            }
        }
        frontier = std::move(next);
    }
    return true;
}

}  // namespace qbrolin
