#include <numbers>

#include "doctest.h"
#include "qbrolin/delta_star.hpp"
#include "qbrolin/errors.hpp"

using namespace qbrolin;

namespace {
GridField sample(const SliceGrid& g, const SliceFunction& f) {
    GridField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = f(g.node(i));
    return out;
}
}  // namespace

TEST_CASE("grid spacing invariant") {
    const SliceGrid g(-1.0, 1.0, -0.5, 0.5, 0.125);
    CHECK(g.nx() == 17);
    CHECK(g.ny() == 9);
    CHECK((g.alpha_max() - g.alpha_min()) / (g.nx() - 1) == doctest::Approx(g.h()).epsilon(1e-12));
    CHECK((g.beta_max() - g.beta_min()) / (g.ny() - 1) == doctest::Approx(g.h()).epsilon(1e-12));
    CHECK_THROWS_AS(SliceGrid(0, 1, 0, 1, -1), PreconditionViolation);
}

TEST_CASE("slice Laplacian on polynomials") {
    const SliceGrid g = SliceGrid::centered({0.3, -0.2}, 1.0, 1.0 / 32);
    const auto l1 = slice_laplacian(sample(g, [](cplx z) { return std::norm(z); }));
    const auto l2 = slice_laplacian(sample(g, [](cplx z) { return z.real() * z.real() - z.imag() * z.imag(); }));
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (l1.mask[i]) continue;
        CHECK(l1.values[i] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::abs(l2.values[i]) <= 1e-9);
    }
    CHECK(l1.mask[g.index(0, 5)] == 1);

    const auto l3 = slice_laplacian(sample(g, [](cplx z) { return std::log(std::abs(z - 2.0)); }));
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!l3.mask[i]) CHECK(std::abs(l3.values[i]) <= 1e-3);

    GridField f = sample(g, [](cplx z) { return z.real(); });
    f.mask[g.index(10, 10)] = 1;
    CHECK_THROWS_AS(slice_laplacian(f), SingularNode);
    const auto relaxed = slice_laplacian(f, false);
    CHECK(relaxed.mask[g.index(11, 10)] == 1);
}

TEST_CASE("fundamental solution of Delta_*") {
    const double h = 1.0 / 64;
    const SliceGrid g = SliceGrid::centered(0.0, 6.0, h);
    const auto c0 = fundamental_solution_check(0.0, gaussian_bump(0.0), g);
    CHECK(c0.expected == 0.5);
    CHECK(std::abs(c0.computed - 0.5) <= 0.005);

    const SliceGrid g1 = SliceGrid::centered(1.0, 6.0, h);
    const auto c1 = fundamental_solution_check(1.0, gaussian_bump(1.0), g1);
    CHECK(c1.computed == doctest::Approx(c0.computed).epsilon(1e-9));

    const auto away = fundamental_solution_check(0.0, gaussian_bump({3.0, 0.0}, 0.3), g);
    CHECK(std::abs(away.computed) <= 1e-4);
    CHECK(away.expected < 1e-20);
}

TEST_CASE("sphere kernel") {
    const double h = 1.0 / 64;
    const SliceGrid g = SliceGrid::centered(0.0, 6.0, h);
    const auto bump = gaussian_bump(0.0);
    const auto c = sphere_kernel_check(Quaternion::i(), bump, g);
    CHECK(c.expected == doctest::Approx(bump({0, 1})).epsilon(1e-12));
    CHECK(c.computed == doctest::Approx(c.expected).epsilon(0.01));

    // Any point of the same sphere gives the same symmetrization.
    const Quaternion other = ImaginaryUnit(1, -2, 0.5).embed(0.0, 1.0);
    const auto c2 = sphere_kernel_check(other, bump, g);
    CHECK(c2.computed == doctest::Approx(c.computed).epsilon(1e-9));

    const auto away = sphere_kernel_check(Quaternion::i(), gaussian_bump({-3.0, 0.0}, 0.3), g);
    CHECK(std::abs(away.computed) <= 1e-4);
    CHECK_THROWS_AS(sphere_kernel_check(Quaternion(1.0), bump, g), PreconditionViolation);
}

TEST_CASE("stencil order") {
    const double order = refinement_order([](cplx z) { return std::log(std::abs(z - 2.0)); },
                                          [](cplx) { return 0.0; }, 0.0, 1.0,
                                          {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128});
    CHECK(order >= 1.8);
    CHECK(order <= 2.2);
}

TEST_CASE("equilibrium density of q^2 from its Green function") {
    const QPolynomial q2 = QPolynomial::from_real(std::vector<double>{0, 0, 1});
    const SliceGrid g = SliceGrid::centered(0.0, 2.0, 1.0 / 64);
    const auto r = measure_from_green(q2, 12, g);
    CHECK(r.total_mass == doctest::Approx(1.0).epsilon(0.05));
    double annulus = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double m = r.density.values[i] * g.h() * g.h();
        const double rad = std::abs(g.node(i));
        if (rad >= 0.9 && rad <= 1.1) annulus += m;
        if (rad <= 0.5) CHECK(r.density.values[i] == 0.0);
    }
    CHECK(annulus >= 0.95);

    // Slice-preserving data give the same raster on every slice.
    const auto r2 = measure_from_green(q2, 12, g, ImaginaryUnit(1, 1, 0));
    CHECK(r2.density.values == r.density.values);

    const auto m = raster_to_measure(r);
    CHECK(m.total_mass() == doctest::Approx(r.total_mass).epsilon(1e-12));
}
