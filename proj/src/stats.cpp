#include "qbrolin/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>

#include "qbrolin/complex_dyn.hpp"
#include "qbrolin/errors.hpp"
#include "qbrolin/numeric_policy.hpp"
#include "qbrolin/parallel.hpp"
#include "qbrolin/rng.hpp"
#include "qbrolin/roots.hpp"

namespace qbrolin {

nlohmann::json EstimateReport::to_json() const {
    return {{"name", name},           {"value", value}, {"stderr", std_error},
            {"n_samples", n_samples}, {"params", params}, {"seed", seed}};
}

namespace {

// All points of p^-1(w) with multiplicity expanded, so each carries weight 1/d.
// Degrees <= 2 use the closed form directly; it is exact enough for sampling
// and avoids the clustering pass.
void fiber_points(const ComplexPoly& p, cplx w, std::vector<cplx>& out) {
    out.clear();
    if (p.degree() <= 2) {
        out = detail::closed_form(p.coeffs(), w);
        if (p.degree() == 2 && out.size() == 1) out.push_back(out[0]);
        return;
    }
    for (const auto& r : solve_fiber(p, w))
        for (int k = 0; k < r.multiplicity; ++k) out.push_back(r.z);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stdev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

ComplexPoly real_slice(const QPolynomial& p) {
    if (!p.has_real_coefficients(numeric_policy().slice_tol))
        throw PreconditionViolation("polynomial must have real coefficients");
    return restrict_to_slice(p, ImaginaryUnit::i());
}

}  // namespace

BackwardOrbitSampler::BackwardOrbitSampler(ComplexPoly p, std::uint64_t seed, cplx start, int burn_in)
    : p_(std::move(p)), seed_(seed), start_(start),
      burn_in_(burn_in < 0 ? numeric_policy().burn_in : burn_in) {
    if (p_.degree() < 2) throw PreconditionViolation("sampling needs degree >= 2");
    if (is_exceptional(p_, start_)) throw ExceptionalTarget("sampler start point is exceptional");
}

std::vector<cplx> BackwardOrbitSampler::sample(std::size_t count) const { return orbits(count, 1); }

std::vector<cplx> BackwardOrbitSampler::orbits(std::size_t count, int length) const {
    if (length < 1 || length > burn_in_ + 1)
        throw PreconditionViolation("orbit length must be in [1, burn_in + 1]");
    const auto len = static_cast<std::size_t>(length);
    std::vector<cplx> out(count * len);
    const std::size_t blocks = (count + kSampleBlock - 1) / kSampleBlock;
    const int d = p_.degree();
    parallel_for(blocks, [&](std::size_t b) {
        Rng rng(derive_seed(seed_, b));
        std::vector<cplx> fib;
        const std::size_t end = std::min(count, (b + 1) * kSampleBlock);
        for (std::size_t s = b * kSampleBlock; s < end; ++s) {
            cplx z = start_;
            // After k steps z is the image of the sample under p^(burn_in - k).
            if (burn_in_ < length) out[s * len + burn_in_] = z;
            for (int k = 1; k <= burn_in_; ++k) {
                fiber_points(p_, z, fib);
                const auto idx = std::min<std::size_t>(static_cast<std::size_t>(rng.uniform() * d), fib.size() - 1);
                z = fib[idx];
                if (burn_in_ - k < length) out[s * len + (burn_in_ - k)] = z;
            }
        }
    });
    return out;
}

std::vector<cplx> sample_mu(const ComplexPoly& p, std::size_t count, std::uint64_t seed, cplx start) {
    return BackwardOrbitSampler(p, seed, start).sample(count);
}

EstimateReport lyapunov_slice(const ComplexPoly& p, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 2) throw PreconditionViolation("lyapunov_slice needs at least 2 samples");
    const ComplexPoly dp = p.derivative();
    std::vector<cplx> crit;
    for (const auto& r : solve_fiber(dp, 0.0)) crit.push_back(r.z);
    const double rel = numeric_policy().cluster_rel;
    auto near_critical = [&](cplx z) {
        return std::any_of(crit.begin(), crit.end(),
                           [&](cplx c) { return std::abs(z - c) <= rel * std::max(1.0, std::abs(c)); });
    };

    auto samples = sample_mu(p, n_samples, seed);
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (near_critical(samples[i])) bad.push_back(i);
    // Replacements come from a separate stream so the main draw is unchanged.
    std::uint64_t stream = 1;
    std::size_t filled = 0;
    while (filled < bad.size()) {
        const auto extra = sample_mu(p, bad.size() + 16, derive_seed(seed, 0xD06E0000ull + stream++));
        for (cplx z : extra)
            if (filled < bad.size() && !near_critical(z)) samples[bad[filled++]] = z;
        if (stream > 64) throw NumericalFailure("could not draw samples away from the critical points");
    }

    std::vector<double> logs(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) logs[i] = std::log(std::abs(dp(samples[i])));
    EstimateReport r;
    r.name = "lyapunov_slice";
    r.value = mean_of(logs);
    r.std_error = stdev_of(logs) / std::sqrt(static_cast<double>(logs.size()));
    r.n_samples = logs.size();
    r.seed = seed;
    r.params = {{"degree", p.degree()}, {"degenerate_resampled", bad.size()}};
    return r;
}

double lyapunov_slice_direction(const QPolynomial& p, const SlicePoint& q0, int n) {
    if (n < 1) throw PreconditionViolation("n must be >= 1");
    const ComplexPoly pc = real_slice(p);
    cplx z = q0.as_complex();
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto [v, dv] = pc.eval_with_derivative(z);
        acc += std::log(std::abs(dv));
        z = v;
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw NumericalFailure("orbit overflowed before step " + std::to_string(n));
    }
    return acc / n;
}

namespace {

std::array<double, 3> im_unit(const Quaternion& q) {
    const double r = q.im_norm();
    if (!(r > 0.0) || !std::isfinite(r)) throw NumericalFailure("orbit left the non-real part of H");
    return {q.x / r, q.y / r, q.z / r};
}

double geodesic_angle(const std::array<double, 3>& u, const std::array<double, 3>& v) {
    const double cx = u[1] * v[2] - u[2] * v[1];
    const double cy = u[2] * v[0] - u[0] * v[2];
    const double cz = u[0] * v[1] - u[1] * v[0];
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), u[0] * v[0] + u[1] * v[1] + u[2] * v[2]);
}

}  // namespace

double lyapunov_sphere_direction(const QPolynomial& p, const SlicePoint& q0, int n, double eps) {
    if (n < 1) throw PreconditionViolation("n must be >= 1");
    if (!(q0.beta > 0.0)) throw PreconditionViolation("sphere direction needs a non-real point");
    if (!(eps > 0.0 && eps < 1.0)) throw PreconditionViolation("eps must be in (0, 1)");
    const auto I = q0.unit.components();
    // Tilt I towards the coordinate axis it is least aligned with.
    int axis = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(I[k]) < std::abs(I[axis])) axis = k;
    std::array<double, 3> t{0, 0, 0};
    t[axis] = 1.0;
    const double dot = t[0] * I[0] + t[1] * I[1] + t[2] * I[2];
    for (int k = 0; k < 3; ++k) t[k] -= dot * I[k];
    const double tn = std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
    const ImaginaryUnit tilted(std::cos(eps) * I[0] + std::sin(eps) * t[0] / tn,
                               std::cos(eps) * I[1] + std::sin(eps) * t[1] / tn,
                               std::cos(eps) * I[2] + std::sin(eps) * t[2] / tn);
    Quaternion a = q0.embed(), b = tilted.embed(q0.alpha, q0.beta);
    const double angle0 = geodesic_angle(im_unit(a), im_unit(b));
    for (int k = 0; k < n; ++k) {
        a = eval(p, a);
        b = eval(p, b);
    }
    const double angle = geodesic_angle(im_unit(a), im_unit(b));
    return std::log(angle / angle0) / n;
}

double transfer_apply(const ComplexPoly& p, const SliceFunction& f, cplx z) {
    return transfer_powers(p, f, z, 1)[1];
}

namespace {

void descend(const ComplexPoly& p, const SliceFunction& f, cplx z, int depth, int n_max, double w,
             std::vector<double>& acc) {
    if (depth == n_max) return;
    std::vector<cplx> fib;
    fiber_points(p, z, fib);
    const double ww = w / static_cast<double>(p.degree());
    for (cplx r : fib) {
        acc[depth + 1] += ww * f(r);
        descend(p, f, r, depth + 1, n_max, ww, acc);
    }
}

}  // namespace

std::vector<double> transfer_powers(const ComplexPoly& p, const SliceFunction& f, cplx z, int n_max) {
    if (n_max < 0) throw PreconditionViolation("n_max must be >= 0");
    if (p.degree() < 2) throw PreconditionViolation("transfer operator needs degree >= 2");
    if (std::pow(static_cast<double>(p.degree()), n_max) > static_cast<double>(numeric_policy().preimage_budget))
        throw BudgetExceeded("transfer tree exceeds the preimage budget");
    std::vector<double> acc(n_max + 1, 0.0);
    acc[0] = f(z);
    descend(p, f, z, 0, n_max, 1.0, acc);
    return acc;
}

SlopeFit fit_tail_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw PreconditionViolation("x and y differ in length");
    if (x.size() < 2) throw PreconditionViolation("slope fit needs at least 2 points");
    const std::size_t m = std::min(x.size(), std::max<std::size_t>(3, x.size() / 2));
    SlopeFit fit;
    fit.first = x.size() - m;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = fit.first; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = fit.first; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw PreconditionViolation("slope fit needs distinct x values");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (m > 2) {
        double ss = 0.0;
        for (std::size_t i = fit.first; i < x.size(); ++i) {
            const double e = y[i] - fit.intercept - fit.slope * x[i];
            ss += e * e;
        }
        fit.residual = std::sqrt(ss / static_cast<double>(m - 2));
    }
    return fit;
}

namespace {

double slope_stderr(const SlopeFit& fit, const std::vector<double>& x) {
    double mx = 0.0;
    const std::size_t m = x.size() - fit.first;
    for (std::size_t i = fit.first; i < x.size(); ++i) mx += x[i];
    mx /= m;
    double sxx = 0.0;
    for (std::size_t i = fit.first; i < x.size(); ++i) sxx += (x[i] - mx) * (x[i] - mx);
    return fit.residual / std::sqrt(sxx);
}

}  // namespace

MixingResult mixing_correlation(const ComplexPoly& p, const TestFunction& phi, const TestFunction& psi,
                                int n_max, std::size_t samples, std::uint64_t seed) {
    if (n_max < 0) throw PreconditionViolation("n_max must be >= 0");
    if (samples < 2) throw PreconditionViolation("mixing needs at least 2 samples");
    std::vector<QuadratureNode> units;
    if (phi.axial && psi.axial) {
        units.push_back({ImaginaryUnit::i(), 1.0});
    } else {
        for (auto node : sphere_quadrature(2).nodes) {
            node.weight /= 4.0 * std::numbers::pi;
            units.push_back(node);
        }
    }
    const auto zs = sample_mu(p, samples, seed);
    const std::size_t w = n_max + 1;
    std::vector<double> phis(samples), prod(samples * w), lam(samples * w);
    parallel_for(samples, [&](std::size_t s) {
        for (const auto& u : units) {
            const double ph = phi(u.unit.embed(zs[s]));
            const auto L = transfer_powers(
                p, [&](cplx v) { return psi(u.unit.embed(v)); }, zs[s], n_max);
            phis[s] += u.weight * ph;
            for (std::size_t k = 0; k < w; ++k) {
                prod[s * w + k] += u.weight * ph * L[k];
                lam[s * w + k] += u.weight * L[k];
            }
        }
    });

    MixingResult out;
    const double phibar = mean_of(phis);
    const double N = static_cast<double>(samples);
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < w; ++k) {
        double mp = 0.0, ml = 0.0;
        for (std::size_t s = 0; s < samples; ++s) {
            mp += prod[s * w + k];
            ml += lam[s * w + k];
        }
        mp /= N;
        ml /= N;
        // Delta-method influence of each sample on mp - phibar * ml.
        std::vector<double> infl(samples);
        for (std::size_t s = 0; s < samples; ++s)
            infl[s] = prod[s * w + k] - phis[s] * ml - phibar * lam[s * w + k];
        const double c = mp - phibar * ml;
        out.series.push_back({static_cast<int>(k), c, stdev_of(infl) / std::sqrt(N)});
        if (c != 0.0) {
            xs.push_back(static_cast<double>(k));
            ys.push_back(std::log(std::abs(c)));
        }
    }
    if (xs.size() >= 2) out.fit = fit_tail_slope(xs, ys);
    return out;
}

double ks_to_gaussian(std::vector<double> x, double sigma) {
    if (x.empty()) throw PreconditionViolation("KS needs samples");
    if (!(sigma > 0.0)) throw PreconditionViolation("KS needs sigma > 0");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double F = 0.5 * std::erfc(-x[i] / (sigma * std::numbers::sqrt2));
        d = std::max({d, F - i / n, (i + 1) / n - F});
    }
    return d;
}

CltResult clt_harness(const ComplexPoly& p, const TestFunction& phi, int n_terms, std::size_t n_samples,
                      std::uint64_t seed, int null_replicates) {
    if (!phi.axial) throw PreconditionViolation("CLT harness needs an axially symmetric test function");
    if (n_terms < 1) throw PreconditionViolation("n_terms must be >= 1");
    if (n_samples < 2) throw PreconditionViolation("CLT needs at least 2 samples");
    if (null_replicates < 1) throw PreconditionViolation("null_replicates must be >= 1");
    // The chain of a backward sample is its forward orbit read in reverse.
    // Reading it off avoids forward iteration, which leaves J under rounding.
    const BackwardOrbitSampler sampler(p, seed, 1.0, numeric_policy().burn_in + n_terms);
    const auto orbit = sampler.orbits(n_samples, n_terms);
    std::vector<double> vals(n_samples * n_terms);
    parallel_for(n_samples, [&](std::size_t s) {
        for (int j = 0; j < n_terms; ++j)
            vals[s * n_terms + j] = phi(ImaginaryUnit::i().embed(orbit[s * n_terms + j]));
    });
    CltResult r;
    r.n_samples = n_samples;
    r.n_terms = n_terms;
    r.mean_phi = mean_of(vals);
    std::vector<double> S(n_samples);
    double s2 = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        double acc = 0.0;
        for (int j = 0; j < n_terms; ++j) acc += vals[s * n_terms + j] - r.mean_phi;
        S[s] = acc / std::sqrt(static_cast<double>(n_terms));
        s2 += S[s] * S[s];
    }
    r.sigma_hat = std::sqrt(s2 / static_cast<double>(n_samples));
    if (r.sigma_hat < 1e-6) {
        r.degenerate = true;
        return r;
    }
    r.ks = ks_to_gaussian(S, r.sigma_hat);

    // Null distribution of the same statistic, sigma refitted each time.
    std::vector<double> null_ks(null_replicates);
    parallel_for(null_replicates, [&](std::size_t k) {
        Rng rng(derive_seed(seed, (1ull << 48) + k));
        std::vector<double> g(n_samples);
        double q = 0.0;
        for (auto& v : g) {
            v = rng.normal();
            q += v * v;
        }
        null_ks[k] = ks_to_gaussian(std::move(g), std::sqrt(q / static_cast<double>(n_samples)));
    });
    std::sort(null_ks.begin(), null_ks.end());
    const auto idx = static_cast<std::size_t>(std::ceil(0.95 * null_replicates)) - 1;
    r.null_p95 = null_ks[std::min(idx, null_ks.size() - 1)];
    return r;
}

SeparatedSetProblem::SeparatedSetProblem(const QPolynomial& p, const AxialBox& box, int n_max,
                                         double grid_density)
    : n_max_(n_max) {
    if (n_max < 1) throw PreconditionViolation("n_max must be >= 1");
    if (!(grid_density > 0.0)) throw PreconditionViolation("grid_density must be positive");
    if (!(box.alpha_max > box.alpha_min) || !(box.beta_max >= 0.0))
        throw PreconditionViolation("empty box");
    const ComplexPoly pc = real_slice(p);
    if (pc.degree() < 1) throw PreconditionViolation("entropy needs a non-constant polynomial");
    const double R = pc.escape_radius();
    const int test_iter = std::max(2 * n_max, 32);
    const double s = 1.0 / grid_density;
    const auto na = static_cast<std::size_t>(std::floor((box.alpha_max - box.alpha_min) / s + 1e-9)) + 1;
    const auto nb = static_cast<std::size_t>(std::floor(box.beta_max / s + 1e-9)) + 1;
    if (static_cast<double>(na) * nb > 1e12) throw BudgetExceeded("candidate grid too large");

    for (const auto& node : sphere_quadrature(1).nodes) units_.push_back(node.unit.components());

    auto node = [&](std::ptrdiff_t ia, std::ptrdiff_t jb) { return cplx(box.alpha_min + ia * s, jb * s); };
    auto in_k = [&](cplx z) {
        for (int k = 0; k < test_iter; ++k) {
            if (std::abs(z) > R) return false;
            z = pc(z);
        }
        return true;
    };

    // Candidates are the nodes of K next to a node outside K: the band around
    // the Julia set, where all orbit separation happens. The band is found on
    // a coarse grid of kCoarse x kCoarse cells first; only cells whose
    // corners disagree, and their neighbours, are refined.
    constexpr std::size_t kCoarse = 16;
    const std::size_t nca = (na + kCoarse - 1) / kCoarse, ncb = (nb + kCoarse - 1) / kCoarse;
    std::vector<std::uint8_t> corner((nca + 1) * (ncb + 1));
    parallel_for(ncb + 1, [&](std::size_t cj) {
        for (std::size_t ci = 0; ci <= nca; ++ci)
            corner[cj * (nca + 1) + ci] = in_k(node(ci * kCoarse, cj * kCoarse));
    });
    std::vector<std::uint8_t> mixed(nca * ncb), marked(nca * ncb);
    for (std::size_t cj = 0; cj < ncb; ++cj)
        for (std::size_t ci = 0; ci < nca; ++ci) {
            const int sum = corner[cj * (nca + 1) + ci] + corner[cj * (nca + 1) + ci + 1] +
                            corner[(cj + 1) * (nca + 1) + ci] + corner[(cj + 1) * (nca + 1) + ci + 1];
            mixed[cj * nca + ci] = sum != 0 && sum != 4;
        }
    std::vector<std::size_t> cells;
    for (std::size_t cj = 0; cj < ncb; ++cj)
        for (std::size_t ci = 0; ci < nca; ++ci) {
            bool any = false;
            for (std::size_t y = cj ? cj - 1 : 0; y <= std::min(cj + 1, ncb - 1) && !any; ++y)
                for (std::size_t x = ci ? ci - 1 : 0; x <= std::min(ci + 1, nca - 1) && !any; ++x)
                    any = mixed[y * nca + x];
            if (any) cells.push_back(cj * nca + ci);
        }

    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> found(cells.size());
    parallel_for(cells.size(), [&](std::size_t k) {
        const std::size_t ia0 = (cells[k] % nca) * kCoarse, jb0 = (cells[k] / nca) * kCoarse;
        const std::size_t w = kCoarse + 2;
        std::vector<std::uint8_t> flag(w * w);
        for (std::size_t y = 0; y < w; ++y)
            for (std::size_t x = 0; x < w; ++x)
                flag[y * w + x] = in_k(node(static_cast<std::ptrdiff_t>(ia0 + x) - 1,
                                            static_cast<std::ptrdiff_t>(jb0 + y) - 1));
        for (std::size_t y = 1; y <= kCoarse && jb0 + y - 1 < nb; ++y)
            for (std::size_t x = 1; x <= kCoarse && ia0 + x - 1 < na; ++x) {
                if (!flag[y * w + x]) continue;
                if (flag[y * w + x - 1] && flag[y * w + x + 1] && flag[(y - 1) * w + x] && flag[(y + 1) * w + x])
                    continue;
                found[k].emplace_back(jb0 + y - 1, ia0 + x - 1);
            }
    });
    std::vector<std::pair<std::size_t, std::size_t>> band;
    for (const auto& f : found) band.insert(band.end(), f.begin(), f.end());
    std::sort(band.begin(), band.end());

    std::vector<std::vector<cplx>> rows(nb);
    for (const auto& [jb, ia] : band) {
        cplx z = node(static_cast<std::ptrdiff_t>(ia), static_cast<std::ptrdiff_t>(jb));
        for (int k = 0; k < n_max; ++k) {
            rows[jb].push_back(z);
            z = pc(z);
        }
    }
    for (std::size_t jb = 0; jb < nb; ++jb) {
        const std::size_t first = orbits_.size() / n_max;
        orbits_.insert(orbits_.end(), rows[jb].begin(), rows[jb].end());
        const std::size_t last = orbits_.size() / n_max;
        for (std::size_t sl = first; sl < last; ++sl) {
            if (jb == 0) {
                cand_.push_back({static_cast<std::uint32_t>(sl), 0});
            } else {
                for (std::size_t u = 0; u < units_.size(); ++u)
                    cand_.push_back({static_cast<std::uint32_t>(sl), static_cast<std::uint8_t>(u)});
            }
        }
    }
}

std::size_t SeparatedSetProblem::separated_count(int n, double eps) const {
    if (n < 1 || n > n_max_) throw PreconditionViolation("n must be in [1, n_max]");
    if (!(eps > 0.0)) throw PreconditionViolation("eps must be positive");
    const double cell = 2.0 * eps;
    const double eps2 = eps * eps;

    // Hash on (A_0, |B_0|, A_{n-1}, |B_{n-1}|) at cell size 2 eps: any point
    // within eps lies in the home cell or the nearer neighbour in each axis.
    auto coord = [&](double v, int& c, int& nb) {
        const double t = v / cell;
        const double f = std::floor(t);
        c = static_cast<int>(std::clamp(f, -30000.0, 30000.0));
        nb = (t - f < 0.5) ? c - 1 : c + 1;
    };
    auto pack = [](const std::array<int, 4>& k) {
        std::uint64_t key = 0;
        for (int v : k) key = (key << 16) | static_cast<std::uint16_t>(v + 32768);
        return key;
    };

    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> table;
    table.reserve(cand_.size() / 4 + 16);
    std::vector<std::uint32_t> accepted;

    auto close = [&](const Candidate& a, const Candidate& b) {
        const auto& ua = units_[a.unit];
        const auto& ub = units_[b.unit];
        const double jj = ua[0] * ub[0] + ua[1] * ub[1] + ua[2] * ub[2];
        const cplx* oa = &orbits_[static_cast<std::size_t>(a.slice) * n_max_];
        const cplx* ob = &orbits_[static_cast<std::size_t>(b.slice) * n_max_];
        for (int j = 0; j < n; ++j) {
            const double da = oa[j].real() - ob[j].real();
            const double b1 = oa[j].imag(), b2 = ob[j].imag();
            if (da * da + b1 * b1 + b2 * b2 - 2.0 * b1 * b2 * jj > eps2) return false;
        }
        return true;
    };

    for (std::uint32_t ci = 0; ci < cand_.size(); ++ci) {
        const Candidate& c = cand_[ci];
        const cplx* o = &orbits_[static_cast<std::size_t>(c.slice) * n_max_];
        std::array<int, 4> home, other;
        coord(o[0].real(), home[0], other[0]);
        coord(std::abs(o[0].imag()), home[1], other[1]);
        coord(o[n - 1].real(), home[2], other[2]);
        coord(std::abs(o[n - 1].imag()), home[3], other[3]);
        bool ok = true;
        for (int mask = 0; mask < 16 && ok; ++mask) {
            std::array<int, 4> k;
            for (int a = 0; a < 4; ++a) k[a] = (mask >> a & 1) ? other[a] : home[a];
            const auto it = table.find(pack(k));
            if (it == table.end()) continue;
            for (std::uint32_t j : it->second)
                if (close(c, cand_[j])) {
                    ok = false;
                    break;
                }
        }
        if (ok) {
            table[pack(home)].push_back(ci);
            accepted.push_back(ci);
        }
    }
    return accepted.size();
}

std::size_t separated_count(const QPolynomial& p, const AxialBox& box, int n, double eps, double grid_density) {
    return SeparatedSetProblem(p, box, n, grid_density).separated_count(n, eps);
}

EstimateReport topological_entropy(const QPolynomial& p, const AxialBox& box, int n_max,
                                   const std::vector<double>& eps_list, double grid_density) {
    if (eps_list.empty()) throw PreconditionViolation("eps_list is empty");
    if (n_max < 2) throw PreconditionViolation("entropy fit needs n_max >= 2");
    const SeparatedSetProblem prob(p, box, n_max, grid_density);
    EstimateReport r;
    r.name = "topological_entropy";
    r.value = -std::numeric_limits<double>::infinity();
    r.n_samples = prob.candidate_count();
    nlohmann::json per_eps = nlohmann::json::array();
    for (double eps : eps_list) {
        std::vector<double> xs, ys;
        std::vector<std::size_t> counts;
        for (int n = 1; n <= n_max; ++n) {
            const auto N = prob.separated_count(n, eps);
            counts.push_back(N);
            xs.push_back(n);
            ys.push_back(std::log(static_cast<double>(std::max<std::size_t>(N, 1))));
        }
        const auto fit = fit_tail_slope(xs, ys);
        per_eps.push_back({{"eps", eps}, {"counts", counts}, {"slope", fit.slope}});
        if (fit.slope > r.value) {
            r.value = fit.slope;
            r.std_error = slope_stderr(fit, xs);
            r.params["eps"] = eps;
        }
    }
    r.params["per_eps"] = per_eps;
    r.params["n_max"] = n_max;
    r.params["grid_density"] = grid_density;
    r.params["box"] = {box.alpha_min, box.alpha_max, box.beta_max};
    return r;
}

std::vector<SliceCell> interval_partition(double lo, double hi, int m, double beta_max) {
    if (m < 1 || !(hi > lo) || !(beta_max > 0.0)) throw PreconditionViolation("bad interval partition");
    std::vector<SliceCell> cells;
    for (int k = 0; k < m; ++k)
        cells.push_back({lo + (hi - lo) * k / m, k + 1 == m ? hi : lo + (hi - lo) * (k + 1) / m, 0.0, beta_max});
    return cells;
}

namespace {

// Tail slope of Miller-Madow corrected block entropies over the given words.
double entropy_slope(std::vector<const std::u16string*> words, int n_max) {
    std::sort(words.begin(), words.end(), [](auto a, auto b) { return *a < *b; });
    const double N = static_cast<double>(words.size());
    std::vector<double> xs, ys;
    for (int n = 1; n <= n_max; ++n) {
        double H = 0.0;
        std::size_t classes = 0;
        std::size_t i = 0;
        while (i < words.size()) {
            std::size_t j = i + 1;
            while (j < words.size() && words[j]->compare(0, n, *words[i], 0, n) == 0) ++j;
            const double q = (j - i) / N;
            H -= q * std::log(q);
            ++classes;
            i = j;
        }
        H += (static_cast<double>(classes) - 1.0) / (2.0 * N);
        xs.push_back(n);
        ys.push_back(H);
    }
    return fit_tail_slope(xs, ys).slope;
}

}  // namespace

EstimateReport partition_entropy(const ComplexPoly& p, const std::vector<cplx>& samples,
                                 const std::vector<SliceCell>& cells, int n_max, int batches) {
    if (n_max < 2) throw PreconditionViolation("partition entropy needs n_max >= 2");
    if (cells.empty() || cells.size() >= 65535) throw PreconditionViolation("bad cell count");
    if (batches < 1 || samples.size() < 2 * static_cast<std::size_t>(batches))
        throw PreconditionViolation("too few samples for the batch count");
    const auto outside = static_cast<char16_t>(cells.size());
    auto code = [&](cplx z) {
        const double a = z.real(), b = std::abs(z.imag());
        for (std::size_t k = 0; k < cells.size(); ++k) {
            const auto& c = cells[k];
            if (a >= c.alpha_lo && a < c.alpha_hi && b >= c.beta_lo && b < c.beta_hi)
                return static_cast<char16_t>(k);
        }
        return outside;
    };
    std::vector<std::u16string> words(samples.size());
    parallel_for(samples.size(), [&](std::size_t s) {
        cplx z = samples[s];
        words[s].resize(n_max);
        for (int j = 0; j < n_max; ++j) {
            words[s][j] = code(z);
            z = p(z);
        }
    });

    std::vector<const std::u16string*> all;
    for (const auto& w : words) all.push_back(&w);
    EstimateReport r;
    r.name = "partition_entropy";
    r.value = entropy_slope(all, n_max);
    r.n_samples = samples.size();
    if (batches > 1) {
        std::vector<double> vals;
        const std::size_t per = samples.size() / batches;
        for (int b = 0; b < batches; ++b) {
            std::vector<const std::u16string*> part;
            for (std::size_t s = b * per; s < (b + 1) * per; ++s) part.push_back(&words[s]);
            vals.push_back(entropy_slope(part, n_max));
        }
        // Batches are 1/batches the size, so their spread overstates the full-sample error by sqrt(batches).
        r.std_error = stdev_of(vals) / std::sqrt(static_cast<double>(batches));
    }
    r.params = {{"cells", cells.size()}, {"n_max", n_max}, {"batches", batches}};
    return r;
}

}  // namespace qbrolin
