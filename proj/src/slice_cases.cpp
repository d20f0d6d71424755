#include "qbrolin/slice_cases.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <mpfr.h>

#include "qbrolin/complex_dyn.hpp"
#include "qbrolin/errors.hpp"
#include "qbrolin/numeric_policy.hpp"
#include "qbrolin/roots.hpp"

namespace qbrolin {

namespace {

double ipow(int d, int n) { return std::pow(static_cast<double>(d), n); }

void check_degree_budget(int d, int n, const char* what) {
    if (2.0 * ipow(d, n) > static_cast<double>(numeric_policy().degree_budget))
        throw BudgetExceeded(std::string(what) + ": degree 2 d^n exceeds the degree budget");
}

QPolynomial checked_real(const QPolynomial& f, const char* what) {
    const double scale = std::max(1.0, f.max_abs_coefficient());
    if (f.max_imaginary() > 1e-10 * scale)
        throw NumericalFailure(std::string(what) + " has non-real coefficients beyond round-off");
    return real_part(f);
}

}  // namespace

OneSlicePolynomial OneSlicePolynomial::from_qpolynomial(const QPolynomial& p) {
    if (p.degree() < 2) throw PreconditionViolation("one-slice polynomial needs degree >= 2");
    const double tol = numeric_policy().slice_tol;
    OneSlicePolynomial out;
    for (const auto& c : p.coeffs()) {
        if (c.im_norm() > tol) {
            out.unit = ImaginaryUnit(c.x, c.y, c.z);
            out.has_nonreal_coefficient = true;
            break;
        }
    }
    out.base = restrict_to_slice(p, out.unit);
    return out;
}

QPolynomial gn_build(const OneSlicePolynomial& p, int n) {
    if (n < 1) throw PreconditionViolation("n must be >= 1");
    const int d = p.degree();
    check_degree_budget(d, n, "g_n");
    ComplexPoly pn = p.base;
    for (int k = 1; k < n; ++k) pn = p.base.compose(pn);
    if (!p.has_nonreal_coefficient) return checked_real(lift_from_slice(pn * pn, p.unit), "g_n");
    return checked_real(symmetrize(lift_from_slice(pn, p.unit)), "g_n");
}

GnMap::GnMap(const OneSlicePolynomial& p, int n)
    : f_(p.base), g_(p.base.conjugate_coefficients()), n_(n) {
    if (n < 1) throw PreconditionViolation("n must be >= 1");
    check_degree_budget(p.degree(), n, "g_n");
    degree_ = static_cast<int>(2.0 * ipow(p.degree(), n));
    const auto& c = f_.coeffs();
    center_ = (-c[c.size() - 2] / (static_cast<double>(f_.degree()) * c.back())).real();
    radius_ = f_.escape_radius();
}

namespace {

// p^n(z) and its derivative, with a running bound (in units of eps) on the
// absolute rounding error of the value.
struct IterValue {
    cplx v, dv;
    double err;
};

IterValue iterate_with_bound(const ComplexPoly& p, cplx z, int n) {
    IterValue r{z, 1.0, 0.0};
    for (int k = 0; k < n; ++k) {
        const auto [v, dv] = p.eval_with_derivative(r.v);
        const double az = std::abs(r.v);
        double scale = 0.0;
        for (auto it = p.coeffs().rbegin(); it != p.coeffs().rend(); ++it) scale = scale * az + std::abs(*it);
        r.err = std::abs(dv) * r.err + scale;
        r.dv *= dv;
        r.v = v;
    }
    return r;
}

}  // namespace

std::pair<cplx, cplx> GnMap::value_and_derivative(cplx z) const {
    const auto F = iterate_with_bound(f_, z, n_);
    const auto G = iterate_with_bound(g_, z, n_);
    return {F.v * G.v, F.dv * G.v + F.v * G.dv};
}

double GnMap::eval_scale(cplx z) const {
    const auto F = iterate_with_bound(f_, z, n_);
    const auto G = iterate_with_bound(g_, z, n_);
    return F.err * std::abs(G.v) + G.err * std::abs(F.v) + std::abs(F.v) * std::abs(G.v);
}

double GnMap::root_radius(cplx w) const { return radius_ * std::max(1.0, std::abs(w)); }

EmpiricalMeasure gn_pullback_measure(const OneSlicePolynomial& p, double a, int n) {
    if (is_exceptional(p.base, a)) throw ExceptionalTarget("target " + std::to_string(a) + " is exceptional");
    const GnMap g(p, n);
    const auto roots = solve_map_fiber(g, cplx(a));
    if (roots.size() == 1) throw ExceptionalTarget("fiber of g_n over the target collapses to one point");
    std::vector<std::pair<cplx, int>> rs;
    for (const auto& r : roots) rs.emplace_back(r.z, r.multiplicity);
    nlohmann::json meta = {{"construction", "gn_pullback"}, {"target", a}, {"depth", n}, {"degree", g.degree()}};
    return EmpiricalMeasure(classify_fiber(rs, 1.0 / g.degree()), std::move(meta));
}

EmpiricalMeasure axial_bin(const std::vector<TaggedAtom>& atoms, double bin_width, nlohmann::json meta) {
    if (!(bin_width > 0.0)) throw PreconditionViolation("bin width must be positive");
    const double tol = numeric_policy().real_tol;
    struct Acc {
        double w = 0.0, wa = 0.0, wr = 0.0;
    };
    std::map<std::pair<long long, long long>, Acc> points, spheres;
    for (const auto& t : atoms) {
        const double rho = std::abs(t.beta);
        const auto ka = static_cast<long long>(std::floor(t.alpha / bin_width));
        const bool real = rho <= tol * std::max(1.0, std::hypot(t.alpha, rho));
        auto& acc = real ? points[{ka, 0}] : spheres[{ka, static_cast<long long>(std::floor(rho / bin_width))}];
        acc.w += t.weight;
        acc.wa += t.weight * t.alpha;
        acc.wr += real ? 0.0 : t.weight * rho;
    }
    std::vector<AtomicMass> out;
    for (const auto& [k, acc] : points) out.push_back(AtomicMass::point(acc.wa / acc.w, acc.w));
    for (const auto& [k, acc] : spheres) out.push_back(AtomicMass::sphere(acc.wa / acc.w, acc.wr / acc.w, acc.w));
    if (!meta.is_object()) meta = nlohmann::json::object();
    meta["binning"] = {{"width", bin_width}, {"raw_atoms", atoms.size()}, {"bins", out.size()}};
    return EmpiricalMeasure(std::move(out), std::move(meta));
}

MuPrimeEstimate mu_prime_estimate_tagged(const OneSlicePolynomial& p, const SphereQuadrature& quad, int n,
                                         double a, double bin_width) {
    if (n < 0) throw PreconditionViolation("depth must be >= 0");
    if (is_exceptional(p.base, a)) throw ExceptionalTarget("target " + std::to_string(a) + " is exceptional");
    const QPolynomial P = p.to_qpolynomial();
    const double scale = 1.0 / ipow(p.degree(), n);
    // Real P: mu' = (1/4pi) int mu_{P(J)}, so only the first half is used at double weight.
    const bool split = p.has_nonreal_coefficient;
    const double norm = (split ? 8.0 : 4.0) * std::numbers::pi;

    MuPrimeEstimate out;
    for (const auto& node : quad.nodes) {
        const QPolynomial PJ = transport_coefficients(P, p.unit, node.unit);
        std::vector<ComplexPoly> maps{restrict_to_slice(PJ, node.unit)};
        if (split) maps.push_back(restrict_to_slice(conj(PJ), node.unit));
        for (const auto& m : maps)
            for (const auto& leaf : preimage_tree(m, a, n))
                out.tagged.push_back({leaf.point.real(), leaf.point.imag(), node.unit,
                                      node.weight / norm * scale * leaf.multiplicity});
    }
    nlohmann::json meta = {{"construction", "mu_prime"},
                           {"target", a},
                           {"depth", n},
                           {"quadrature_level", quad.level},
                           {"split", split}};
    out.measure = axial_bin(out.tagged, bin_width, std::move(meta));
    return out;
}

EmpiricalMeasure mu_prime_estimate(const OneSlicePolynomial& p, const SphereQuadrature& quad, int n, double a,
                                   double bin_width) {
    return mu_prime_estimate_tagged(p, quad, n, a, bin_width).measure;
}

GeneralIterate hn_build(const QPolynomial& p, int n) {
    if (n < 1) throw PreconditionViolation("n must be >= 1");
    const int d = p.degree();
    if (d < 2) throw PreconditionViolation("h_n needs degree >= 2");
    check_degree_budget(d, n, "h_n");
    GeneralIterate g;
    g.n = n;
    g.source = p;
    g.bullet = bullet_pow(p, n);
    if (g.bullet.degree() != static_cast<int>(ipow(d, n)))
        throw NumericalFailure("bullet iterate lost its leading coefficient");
    g.h = checked_real(symmetrize(g.bullet), "h_n");
    return g;
}

double ScaledComplex::log_abs() const {
    return std::log(std::abs(mantissa)) + static_cast<double>(exponent) * std::numbers::ln2;
}

double ScaledComplex::log_abs_minus(double a) const {
    if (exponent < -1000) return std::log(std::abs(a));
    if (exponent > 1000) return log_abs();
    const cplx t = mantissa - std::ldexp(a, static_cast<int>(-exponent));
    return std::log(std::abs(t)) + static_cast<double>(exponent) * std::numbers::ln2;
}

cplx ScaledComplex::value() const {
    const int e = static_cast<int>(std::clamp(exponent, -4000L, 4000L));
    return {std::ldexp(mantissa.real(), e), std::ldexp(mantissa.imag(), e)};
}

namespace {

ScaledComplex normalized(cplx m, long e) {
    const double mag = std::max(std::abs(m.real()), std::abs(m.imag()));
    if (!(mag > 0.0) || !std::isfinite(mag)) return {m, mag > 0.0 ? e : 0};
    int k;
    std::frexp(mag, &k);
    return {{std::ldexp(m.real(), -k), std::ldexp(m.imag(), -k)}, e + k};
}

ScaledComplex operator*(const ScaledComplex& x, const ScaledComplex& y) {
    return normalized(x.mantissa * y.mantissa, x.exponent + y.exponent);
}

cplx scaled_down(cplx c, long e) {
    if (e > 2000) return 0.0;
    const int k = static_cast<int>(std::clamp(-e, -2000L, 2000L));
    return {std::ldexp(c.real(), k), std::ldexp(c.imag(), k)};
}

ScaledComplex operator+(const ScaledComplex& x, const ScaledComplex& y) {
    if (x.mantissa == 0.0) return y;
    if (y.mantissa == 0.0) return x;
    const long e = std::max(x.exponent, y.exponent);
    return normalized(scaled_down(x.mantissa, e - x.exponent) + scaled_down(y.mantissa, e - y.exponent), e);
}

ScaledComplex operator-(const ScaledComplex& x) { return {-x.mantissa, x.exponent}; }
ScaledComplex conj(const ScaledComplex& x) { return {std::conj(x.mantissa), x.exponent}; }

// Arbitrary-precision complex for the cancellation fallback, at a
// thread-local working precision.
thread_local mpfr_prec_t g_prec = 128;

class PrecisionScope {
public:
    explicit PrecisionScope(long bits) : saved_(g_prec) { g_prec = static_cast<mpfr_prec_t>(bits); }
    ~PrecisionScope() { g_prec = saved_; }
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    mpfr_prec_t saved_;
};

class Big {
public:
    explicit Big(double x = 0.0) {
        mpfr_init2(v_, g_prec);
        mpfr_set_d(v_, x, MPFR_RNDN);
    }
    Big(const Big& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    Big& operator=(const Big& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    ~Big() { mpfr_clear(v_); }
    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }

private:
    mpfr_t v_;
};

struct MpComplex {
    Big re, im;
};

MpComplex operator*(const MpComplex& x, const MpComplex& y) {
    MpComplex r;
    Big t;
    mpfr_mul(r.re.get(), x.re.get(), y.re.get(), MPFR_RNDN);
    mpfr_mul(t.get(), x.im.get(), y.im.get(), MPFR_RNDN);
    mpfr_sub(r.re.get(), r.re.get(), t.get(), MPFR_RNDN);
    mpfr_mul(r.im.get(), x.re.get(), y.im.get(), MPFR_RNDN);
    mpfr_mul(t.get(), x.im.get(), y.re.get(), MPFR_RNDN);
    mpfr_add(r.im.get(), r.im.get(), t.get(), MPFR_RNDN);
    return r;
}
MpComplex operator+(const MpComplex& x, const MpComplex& y) {
    MpComplex r;
    mpfr_add(r.re.get(), x.re.get(), y.re.get(), MPFR_RNDN);
    mpfr_add(r.im.get(), x.im.get(), y.im.get(), MPFR_RNDN);
    return r;
}
MpComplex operator-(const MpComplex& x) {
    MpComplex r;
    mpfr_neg(r.re.get(), x.re.get(), MPFR_RNDN);
    mpfr_neg(r.im.get(), x.im.get(), MPFR_RNDN);
    return r;
}
MpComplex conj(const MpComplex& x) {
    MpComplex r = x;
    mpfr_neg(r.im.get(), r.im.get(), MPFR_RNDN);
    return r;
}

ScaledComplex to_scaled(const ScaledComplex& x) { return x; }

ScaledComplex to_scaled(const MpComplex& x) {
    if (mpfr_zero_p(x.re.get()) && mpfr_zero_p(x.im.get())) return {0.0, 0};
    const mpfr_exp_t e = std::max(mpfr_zero_p(x.re.get()) ? mpfr_get_emin() : mpfr_get_exp(x.re.get()),
                                  mpfr_zero_p(x.im.get()) ? mpfr_get_emin() : mpfr_get_exp(x.im.get()));
    Big re = x.re, im = x.im;
    mpfr_mul_2si(re.get(), re.get(), -e, MPFR_RNDN);
    mpfr_mul_2si(im.get(), im.get(), -e, MPFR_RNDN);
    return {{mpfr_get_d(re.get(), MPFR_RNDN), mpfr_get_d(im.get(), MPFR_RNDN)}, static_cast<long>(e)};
}

template <class T>
T lift(cplx c);
template <>
ScaledComplex lift<ScaledComplex>(cplx c) {
    return normalized(c, 0);
}
template <>
MpComplex lift<MpComplex>(cplx c) {
    return {Big(c.real()), Big(c.imag())};
}

// Split values (F1(z), F1(conj z), F2(z), F2(conj z)) of f = F1 + F2 j.
template <class T>
struct Split {
    T a, ab, b, bb;
};

// Star product: (X1 + X2 j) * (Y1 + Y2 j) = (X1 Y1 - X2 Y2^c) + (X1 Y2 + X2 Y1^c) j
// with Y^c(z) = conj(Y(conj z)).
template <class T>
Split<T> star(const Split<T>& x, const Split<T>& y) {
    return {x.a * y.a + -(x.b * conj(y.bb)), x.ab * y.ab + -(x.bb * conj(y.b)), x.a * y.b + x.b * conj(y.ab),
            x.ab * y.bb + x.bb * conj(y.a)};
}

struct HnTerm {
    ScaledComplex value;
    double lost_bits;  // log2 of the term scale over |h_n|
};

double log2_abs(const ScaledComplex& x) {
    return x.mantissa == 0.0 ? -std::numeric_limits<double>::infinity()
                             : std::log2(std::abs(x.mantissa)) + static_cast<double>(x.exponent);
}

template <class T>
std::vector<HnTerm> split_values(const std::vector<cplx>& u, const std::vector<cplx>& v, cplx z, int n_max) {
    std::vector<HnTerm> out;
    const T zero = lift<T>(0.0);
    Split<T> w{lift<T>(z), lift<T>(std::conj(z)), zero, zero};
    std::vector<T> U, V;
    for (std::size_t j = 0; j < u.size(); ++j) {
        U.push_back(lift<T>(u[j]));
        V.push_back(lift<T>(v[j]));
    }
    for (int k = 0; k < n_max; ++k) {
        // p . w = a_0 + w * (a_1 + w * (... + w * a_d)).
        Split<T> acc{U.back(), U.back(), V.back(), V.back()};
        for (std::size_t j = U.size() - 1; j-- > 0;) {
            acc = star(w, acc);
            acc.a = acc.a + U[j];
            acc.ab = acc.ab + U[j];
            acc.b = acc.b + V[j];
            acc.bb = acc.bb + V[j];
        }
        w = acc;
        const T t1 = w.a * conj(w.ab), t2 = w.b * conj(w.bb);
        const ScaledComplex h = to_scaled(t1 + t2);
        const double scale = std::max(log2_abs(to_scaled(t1)), log2_abs(to_scaled(t2)));
        const double lh = log2_abs(h);
        double lost = 0.0;
        if (std::isfinite(lh))
            lost = std::max(0.0, scale - lh);
        else if (std::isfinite(scale))
            lost = std::numeric_limits<double>::infinity();
        out.push_back({h, lost});
    }
    return out;
}

}  // namespace

HnEvaluator::HnEvaluator(const QPolynomial& p) {
    if (p.degree() < 1) throw PreconditionViolation("h_n needs a non-constant polynomial");
    for (const auto& c : p.coeffs()) {
        u_.emplace_back(c.w, c.x);
        v_.emplace_back(c.y, c.z);
    }
}

std::vector<ScaledComplex> HnEvaluator::values(cplx z, int n_max) const {
    if (n_max < 1) throw PreconditionViolation("n_max must be >= 1");
    // The two products in h_n = F1 F1^c + F2 F2^c can cancel to far below
    // double precision off the real axis. Redo in MPFR with enough bits.
    constexpr double kKeepBits = 60.0;
    auto terms = split_values<ScaledComplex>(u_, v_, z, n_max);
    double worst = 0.0;
    for (const auto& t : terms) worst = std::max(worst, t.lost_bits);
    if (worst > 53.0 - kKeepBits / 3) {
        long prec = 128;
        for (;;) {
            const PrecisionScope scope(prec);
            terms = split_values<MpComplex>(u_, v_, z, n_max);
            double lost = 0.0;
            for (const auto& t : terms) lost = std::max(lost, t.lost_bits);
            if (lost + kKeepBits <= static_cast<double>(prec)) break;
            // An exact zero that survives this many bits is taken as a zero of h_n.
            if (!std::isfinite(lost) && prec >= 4096) break;
            if (prec >= (1L << 20)) throw NumericalFailure("h_n evaluation: cancellation beyond 2^20 bits");
            prec = std::isfinite(lost) ? std::max(2 * prec, static_cast<long>(lost + 2 * kKeepBits)) : 4 * prec;
        }
    }
    std::vector<ScaledComplex> out;
    for (const auto& t : terms) out.push_back(t.value);
    return out;
}

Quaternion HnEvaluator::value(const Quaternion& q, int n) const {
    const SlicePoint s = slice_decompose(q);
    return s.unit.embed(values(s.as_complex(), n).back().value());
}

namespace {

bool scaled_close(const ScaledComplex& x, const ScaledComplex& y, double rel) {
    const long e = std::max(x.exponent, y.exponent);
    const cplx mx = scaled_down(x.mantissa, e - x.exponent);
    const cplx my = scaled_down(y.mantissa, e - y.exponent);
    // Relative to max(1, |value|), in units of 2^e.
    const double unit = e > 1000 ? 0.0 : std::ldexp(1.0, static_cast<int>(std::max(-1000L, -e)));
    return std::abs(mx - my) <= rel * std::max({unit, std::abs(mx), std::abs(my)});
}

}  // namespace

OrbitFiniteness orbit_finite(const QPolynomial& p, const Quaternion& q0, int horizon) {
    if (horizon < 2) throw PreconditionViolation("horizon must be >= 2");
    const HnEvaluator ev(p);
    const auto vals = ev.values(slice_decompose(q0).as_complex(), horizon);
    const double rel = numeric_policy().cluster_rel;
    std::vector<ScaledComplex> distinct;
    for (const auto& v : vals)
        if (std::none_of(distinct.begin(), distinct.end(), [&](const auto& d) { return scaled_close(d, v, rel); }))
            distinct.push_back(v);
    return {distinct.size() < static_cast<std::size_t>(horizon), horizon, distinct.size()};
}

GapResult brolin3_gap(const QPolynomial& p, double a, double b, int n, const std::vector<Quaternion>& probes,
                      int horizon, bool enforce_screen) {
    if (n < 1) throw PreconditionViolation("n must be >= 1");
    if (p.degree() < 2) throw PreconditionViolation("gap test needs degree >= 2");
    if (probes.empty()) throw PreconditionViolation("no probe points");
    GapResult r;
    r.horizon = horizon;
    if (a == b) {
        r.used = probes.size();
        return r;
    }
    for (double t : {a, b}) {
        if (!orbit_finite(p, Quaternion(t), horizon).finite) continue;
        if (enforce_screen)
            throw ExceptionalTarget("target " + std::to_string(t) + " has a finite h-orbit at horizon " +
                                    std::to_string(horizon));
        r.finite_orbit_targets.push_back(t);
    }
    const HnEvaluator ev(p);
    const double dn = ipow(p.degree(), n);
    const double floor_log = std::log(1e-10);
    for (const auto& q : probes) {
        const auto h = ev.values(slice_decompose(q).as_complex(), n).back();
        const double la = h.log_abs_minus(a), lb = h.log_abs_minus(b);
        const double lh = std::max(0.0, h.log_abs());
        // Probe on (or numerically at) a fiber of a or b.
        if (!std::isfinite(la) || !std::isfinite(lb) || la < floor_log + lh || lb < floor_log + lh) {
            ++r.skipped;
            continue;
        }
        ++r.used;
        r.gap = std::max(r.gap, std::abs(la - lb) / dn);
    }
    return r;
}

std::vector<Quaternion> probe_grid(double alpha_min, double alpha_max, double beta_min, double beta_max, int nx,
                                   int ny) {
    if (nx < 1 || ny < 1) throw PreconditionViolation("probe grid needs at least one node per side");
    const auto& units = sphere_quadrature(1).nodes;
    std::vector<Quaternion> out;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double al = nx == 1 ? alpha_min : alpha_min + (alpha_max - alpha_min) * i / (nx - 1);
            const double be = ny == 1 ? beta_min : beta_min + (beta_max - beta_min) * j / (ny - 1);
            out.push_back(units[static_cast<std::size_t>(i + j * nx) % units.size()].unit.embed(al, be));
        }
    return out;
}

}  // namespace qbrolin
