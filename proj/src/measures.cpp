#include "qbrolin/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qbrolin/complex_dyn.hpp"
#include "qbrolin/errors.hpp"
#include "qbrolin/numeric_policy.hpp"

namespace qbrolin {

AtomicMass AtomicMass::point(double r, double w) { return {AtomKind::Point, r, 0.0, w}; }

AtomicMass AtomicMass::sphere(double alpha, double rho, double w) {
    return {AtomKind::Sphere, alpha, rho, w};
}

AtomicMass AtomicMass::from_complex(cplx z, double w, double tol) {
    if (std::abs(z.imag()) <= tol * std::max(1.0, std::abs(z))) return point(z.real(), w);
    return sphere(z.real(), std::abs(z.imag()), w);
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<AtomicMass> atoms, nlohmann::json meta)
    : atoms_(std::move(atoms)), meta_(std::move(meta)) {
    for (const auto& a : atoms_) {
        if (!(a.weight > 0.0) || !std::isfinite(a.weight) || !std::isfinite(a.alpha))
            throw PreconditionViolation("atom weight must be finite and positive");
        if (a.kind == AtomKind::Sphere && !(a.rho > 0.0 && std::isfinite(a.rho)))
            throw PreconditionViolation("sphere atom needs rho > 0");
        if (a.kind == AtomKind::Point && a.rho != 0.0)
            throw PreconditionViolation("point atom must have rho = 0");
    }
    std::sort(atoms_.begin(), atoms_.end(), [](const AtomicMass& x, const AtomicMass& y) {
        if (x.kind != y.kind) return x.kind < y.kind;
        if (x.alpha != y.alpha) return x.alpha < y.alpha;
        if (x.rho != y.rho) return x.rho < y.rho;
        return x.weight < y.weight;
    });
}

double EmpiricalMeasure::total_mass() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight;
    return s;
}

double EmpiricalMeasure::real_mass() const {
    double s = 0.0;
    for (const auto& a : atoms_)
        if (a.kind == AtomKind::Point) s += a.weight;
    return s;
}

EmpiricalMeasure EmpiricalMeasure::scaled(double s) const {
    auto atoms = atoms_;
    for (auto& a : atoms) a.weight *= s;
    return EmpiricalMeasure(std::move(atoms), meta_);
}

EmpiricalMeasure EmpiricalMeasure::mixed(const EmpiricalMeasure& other, double alpha) const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionViolation("mixing weight must be in [0,1]");
    std::vector<AtomicMass> atoms;
    for (auto a : atoms_)
        if (alpha > 0.0) atoms.push_back({a.kind, a.alpha, a.rho, a.weight * alpha});
    for (auto a : other.atoms_)
        if (alpha < 1.0) atoms.push_back({a.kind, a.alpha, a.rho, a.weight * (1.0 - alpha)});
    return EmpiricalMeasure(std::move(atoms));
}

namespace {

double x_of(const Quaternion& q) { return q.w; }
double rho_of(const Quaternion& q) { return q.im_norm(); }

std::vector<TestFunction> make_panel() {
    auto tf = [](std::string id, std::function<double(const Quaternion&)> f) {
        return TestFunction{std::move(id), std::move(f), std::numeric_limits<double>::infinity(), true};
    };
    return {
        tf("re", [](const Quaternion& q) { return x_of(q); }),
        tf("rho", [](const Quaternion& q) { return rho_of(q); }),
        tf("re2", [](const Quaternion& q) { return x_of(q) * x_of(q); }),
        tf("re_rho", [](const Quaternion& q) { return x_of(q) * rho_of(q); }),
        tf("rho2", [](const Quaternion& q) { return rho_of(q) * rho_of(q); }),
        tf("re3", [](const Quaternion& q) { return x_of(q) * x_of(q) * x_of(q); }),
        tf("re2_rho", [](const Quaternion& q) { return x_of(q) * x_of(q) * rho_of(q); }),
        tf("rho3", [](const Quaternion& q) { return rho_of(q) * rho_of(q) * rho_of(q); }),
        tf("gauss0", [](const Quaternion& q) { return std::exp(-0.5 * q.norm2()); }),
        tf("gauss1", [](const Quaternion& q) { return std::exp(-0.5 * (q - Quaternion(1.0)).norm2()); }),
        tf("norm2", [](const Quaternion& q) { return q.norm2(); }),
        tf("cos_re", [](const Quaternion& q) { return std::cos(x_of(q)); }),
    };
}

}  // namespace

const std::vector<TestFunction>& standard_panel() {
    static const std::vector<TestFunction> panel = make_panel();
    return panel;
}

const TestFunction& panel_function(const std::string& id) {
    for (const auto& f : standard_panel())
        if (f.id == id) return f;
    throw PreconditionViolation("unknown panel function '" + id + "'");
}

std::vector<AtomicMass> classify_fiber(const std::vector<std::pair<cplx, int>>& roots, double scale) {
    const double tol = numeric_policy().real_tol;
    std::vector<AtomicMass> out;
    std::vector<std::pair<cplx, int>> upper;
    int upper_mult = 0, lower_mult = 0;
    for (const auto& [z, m] : roots) {
        if (std::abs(z.imag()) <= tol * std::max(1.0, std::abs(z))) {
            out.push_back(AtomicMass::point(z.real(), scale * m));
        } else if (z.imag() > 0.0) {
            upper.emplace_back(z, m);
            upper_mult += m;
        } else {
            lower_mult += m;
        }
    }
    if (upper_mult == lower_mult) {
        for (const auto& [z, m] : upper) out.push_back(AtomicMass::sphere(z.real(), z.imag(), 2.0 * scale * m));
    } else {
        // Conjugate structure broken by round-off: one sphere per root.
        for (const auto& [z, m] : roots)
            if (std::abs(z.imag()) > tol * std::max(1.0, std::abs(z)))
                out.push_back(AtomicMass::sphere(z.real(), std::abs(z.imag()), scale * m));
    }
    return out;
}

namespace {

ComplexPoly real_slice_poly(const QPolynomial& p) {
    if (!p.has_real_coefficients(numeric_policy().slice_tol))
        throw PreconditionViolation("polynomial must have real coefficients");
    return restrict_to_slice(p, ImaginaryUnit::i());
}

}  // namespace

EmpiricalMeasure brolin_pullback(const QPolynomial& p, double a, int n) {
    const ComplexPoly pc = real_slice_poly(p);
    const int d = pc.degree();
    if (d < 2) throw PreconditionViolation("brolin_pullback needs degree >= 2");
    if (n < 0) throw PreconditionViolation("depth must be >= 0");
    if (is_exceptional(pc, a))
        throw ExceptionalTarget("target " + std::to_string(a) + " is exceptional");
    const auto tree = preimage_tree(pc, a, n);
    std::vector<std::pair<cplx, int>> roots;
    roots.reserve(tree.size());
    for (const auto& node : tree) roots.emplace_back(node.point, node.multiplicity);
    const double scale = std::pow(static_cast<double>(d), -n);
    nlohmann::json meta = {{"construction", "brolin_pullback"}, {"target", a}, {"depth", n}, {"degree", d}};
    return EmpiricalMeasure(classify_fiber(roots, scale), std::move(meta));
}

double pair(const EmpiricalMeasure& m, const TestFunction& f, const SphereQuadrature& quad) {
    const double inv4pi = 1.0 / (4.0 * std::numbers::pi);
    double acc = 0.0;
    for (const auto& a : m.atoms()) {
        if (a.kind == AtomKind::Point) {
            acc += a.weight * f(Quaternion(a.alpha));
        } else {
            const double avg =
                inv4pi * quad.integrate([&](const ImaginaryUnit& u) { return f(u.embed(a.alpha, a.rho)); });
            acc += a.weight * avg;
        }
    }
    return acc;
}

std::vector<double> panel_differences(const EmpiricalMeasure& m1, const EmpiricalMeasure& m2,
                                      const std::vector<TestFunction>& panel,
                                      const SphereQuadrature& quad) {
    std::vector<double> out;
    out.reserve(panel.size());
    for (const auto& f : panel) out.push_back(std::abs(pair(m1, f, quad) - pair(m2, f, quad)));
    return out;
}

double weak_distance(const EmpiricalMeasure& m1, const EmpiricalMeasure& m2,
                     const std::vector<TestFunction>& panel, const SphereQuadrature& quad) {
    double m = 0.0;
    for (double v : panel_differences(m1, m2, panel, quad)) m = std::max(m, v);
    return m;
}

EmpiricalMeasure pushforward(const QPolynomial& p, const EmpiricalMeasure& m) {
    const ComplexPoly pc = real_slice_poly(p);
    const double tol = numeric_policy().real_tol;
    std::vector<AtomicMass> out;
    out.reserve(m.size());
    for (const auto& a : m.atoms()) {
        if (a.kind == AtomKind::Point)
            out.push_back(AtomicMass::point(pc(cplx(a.alpha)).real(), a.weight));
        else
            out.push_back(AtomicMass::from_complex(pc(cplx(a.alpha, a.rho)), a.weight, tol));
    }
    return EmpiricalMeasure(std::move(out), m.meta());
}

EmpiricalMeasure pullback(const QPolynomial& p, const EmpiricalMeasure& m) {
    const ComplexPoly pc = real_slice_poly(p);
    std::vector<std::vector<AtomicMass>> parts(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& a = m.atoms()[i];
        std::vector<std::pair<cplx, int>> roots;
        const cplx target = a.kind == AtomKind::Point ? cplx(a.alpha) : cplx(a.alpha, a.rho);
        for (const auto& r : solve_fiber(pc, target)) roots.emplace_back(r.z, r.multiplicity);
        if (a.kind == AtomKind::Point) {
            parts[i] = classify_fiber(roots, a.weight);
        } else {
            // Each root z of p = alpha + i rho carries the whole sphere S_z.
            for (const auto& [z, mult] : roots)
                parts[i].push_back(AtomicMass::sphere(z.real(), std::abs(z.imag()), a.weight * mult));
        }
    }
    std::vector<AtomicMass> out;
    for (auto& part : parts) out.insert(out.end(), part.begin(), part.end());
    return EmpiricalMeasure(std::move(out), m.meta());
}

std::vector<std::pair<cplx, double>> slice_marginal(const EmpiricalMeasure& m, const ImaginaryUnit&) {
    std::vector<std::pair<cplx, double>> out;
    for (const auto& a : m.atoms()) {
        if (a.kind == AtomKind::Point) {
            out.emplace_back(cplx(a.alpha), a.weight);
        } else {
            out.emplace_back(cplx(a.alpha, a.rho), 0.5 * a.weight);
            out.emplace_back(cplx(a.alpha, -a.rho), 0.5 * a.weight);
        }
    }
    return out;
}

}  // namespace qbrolin
