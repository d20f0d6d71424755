#include <algorithm>
#include <numbers>

#include "doctest.h"
#include "qbrolin/complex_dyn.hpp"
#include "qbrolin/errors.hpp"
#include "qbrolin/numeric_policy.hpp"

using namespace qbrolin;

namespace {
const ComplexPoly z2({0, 0, 1});
const ComplexPoly z2m1({-1, 0, 1});
const ComplexPoly z2m2({-2, 0, 1});

bool multiset_close(std::vector<cplx> a, std::vector<cplx> b, double tol) {
    if (a.size() != b.size()) return false;
    for (cplx x : a) {
        auto it = std::min_element(b.begin(), b.end(),
                                   [&](cplx u, cplx v) { return std::abs(u - x) < std::abs(v - x); });
        if (std::abs(*it - x) > tol) return false;
        b.erase(it);
    }
    return true;
}
}  // namespace

TEST_CASE("escape radius bound") {
    CHECK(z2.escape_radius() == 2.0);
    CHECK(ComplexPoly({-2, 0, 1}).escape_radius() == 6.0);
    CHECK_THROWS_AS(EscapeParams({3.0, 10}).validate(z2m2), PreconditionViolation);
}

TEST_CASE("iterate") {
    CHECK(iterate(z2, 2.0, 3).value == cplx(256.0));
    CHECK(iterate(z2, 2.0, 3).escaped);
    CHECK(iterate(z2m1, 0.0, 2).value == cplx(0.0));
    CHECK(!iterate(z2m1, 0.0, 50).escaped);
    CHECK(std::abs(iterate(z2, std::polar(1.0, std::numbers::pi / 4), 2).value - cplx(-1.0)) < 1e-15);
    CHECK(iterate(z2, 1.0, 0).value == cplx(1.0));
}

TEST_CASE("escape ledger keeps exact log modulus far beyond overflow") {
    const auto r = iterate(z2, 3.0, 60);
    CHECK(r.on_ledger);
    CHECK(r.log_modulus == doctest::Approx(std::ldexp(std::log(3.0), 60)).epsilon(1e-13));
    const cplx c(0.3, -0.1);
    const ComplexPoly p({c, 0, 1});
    const auto deep = iterate(p, {1.0, 1.0}, 40);
    const auto shallow = iterate(p, {1.0, 1.0}, 6);
    // Past escape, log|p^n| = 2^(n-6) log|p^6| + small correction.
    CHECK(deep.log_modulus / std::ldexp(shallow.log_modulus, 34) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::isfinite(deep.log_modulus));
}

TEST_CASE("fiber solver") {
    auto sorted = [](std::vector<Root> r) {
        std::vector<cplx> z;
        for (auto& x : r)
            for (int m = 0; m < x.multiplicity; ++m) z.push_back(x.z);
        return z;
    };
    CHECK(multiset_close(sorted(solve_fiber(z2, 4.0)), {2.0, -2.0}, 1e-14));
    const auto zero = solve_fiber(z2, 0.0);
    REQUIRE(zero.size() == 1);
    CHECK(zero[0].multiplicity == 2);
    CHECK(multiset_close(sorted(solve_fiber(z2m2, 2.0)), {2.0, -2.0}, 1e-14));

    // Aberth path: degree 7 with a triple root and complex coefficients.
    ComplexPoly p = ComplexPoly({-0.5, 1}) * ComplexPoly({-0.5, 1}) * ComplexPoly({-0.5, 1}) *
                    ComplexPoly({cplx(1, 2), 1}) * ComplexPoly({cplx(-3, 0.5), 1}) *
                    ComplexPoly({cplx(1, -1), 1}) * ComplexPoly({4, 1});
    const auto roots = solve_fiber(p, 0.0);
    int total = 0;
    for (const auto& r : roots) total += r.multiplicity;
    CHECK(total == 7);
    CHECK(multiset_close(sorted(roots), {0.5, 0.5, 0.5, cplx(-1, -2), cplx(3, -0.5), cplx(-1, 1), -4.0}, 1e-4));

    // Random cubic targets: residual bound and conjugate symmetry for real data.
    const ComplexPoly cubic({0.2, -1.0, 0.3, 1.0});
    for (double w : {-3.0, -0.4, 0.0, 0.7, 5.0}) {
        const auto fr = solve_fiber(cubic, w);
        int m = 0;
        for (const auto& r : fr) {
            m += r.multiplicity;
            CHECK(std::abs(cubic(r.z) - w) <= 1e-9 * (1 + std::abs(w)));
        }
        CHECK(m == 3);
        auto z = sorted(fr);
        std::vector<cplx> zc;
        for (cplx x : z) zc.push_back(std::conj(x));
        CHECK(multiset_close(z, zc, 1e-9));
    }
    CHECK_THROWS_AS(solve_fiber(ComplexPoly({1.0}), 0.0), PreconditionViolation);
}

TEST_CASE("preimage tree") {
    SUBCASE("eighth roots of unity") {
        const auto t = preimage_tree(z2, 1.0, 3);
        REQUIRE(t.size() == 8);
        std::vector<cplx> got, expected;
        for (const auto& n : t) {
            got.push_back(n.point);
            CHECK(n.depth == 3);
            CHECK(n.multiplicity == 1);
        }
        for (int k = 0; k < 8; ++k) expected.push_back(std::polar(1.0, std::numbers::pi * k / 4));
        CHECK(multiset_close(got, expected, 1e-14));
    }
    SUBCASE("exceptional point collapses") {
        const auto t = preimage_tree(z2, 0.0, 2);
        REQUIRE(t.size() == 1);
        CHECK(t[0].multiplicity == 4);
    }
    SUBCASE("random cubic counts and forward consistency") {
        const ComplexPoly c({cplx(0.1, 0.2), cplx(-0.4, 0.0), cplx(0.0, 0.3), 1.0});
        const cplx a(0.25, -0.5);
        for (int n = 1; n <= 6; ++n) {
            const auto t = preimage_tree(c, a, n);
            int count = 0;
            for (const auto& node : t) {
                count += node.multiplicity;
                cplx z = node.point;
                for (int k = 0; k < n; ++k) z = c(z);
                CHECK(std::abs(z - a) <= 1e-7 * (1 + std::abs(a)));
            }
            CHECK(count == static_cast<int>(std::pow(3, n)));
        }
    }
    CHECK_THROWS_AS(preimage_tree(z2, 1.0, 5, 16), BudgetExceeded);
}

TEST_CASE("green_n") {
    for (int n : {0, 1, 5, 20, 200})
        CHECK(green_n(z2, std::polar(3.0, 0.7), n) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(green_n(z2, {0.3, 0.4}, 30) == 0.0);
    CHECK(green_n(z2m1, 0.0, 30) == 0.0);
    const ComplexPoly p({cplx(-0.12, 0.75), 0, 1});
    for (cplx z : {cplx(0.8, 0.9), cplx(-1.5, 0.2), cplx(2.5, -3.0)})
        for (int n : {1, 5, 12}) {
            const double lhs = green_n(p, p(z), n);
            const double rhs = 2.0 * green_n(p, z, n + 1);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    // |G_n - G_{n+1}| decays like d^-n.
    const cplx z(0.6, 0.9);
    double prev = std::abs(green_n(z2m1, z, 4) - green_n(z2m1, z, 5));
    for (int n = 5; n < 20; ++n) {
        const double diff = std::abs(green_n(z2m1, z, n) - green_n(z2m1, z, n + 1));
        if (diff > 1e-15 && prev > 1e-15) CHECK(std::log(diff / prev) <= -std::log(2.0) + 0.1);
        prev = diff;
    }
}

TEST_CASE("filled Julia masks") {
    const SliceGrid g = SliceGrid::centered(0.0, 2.5, 1.0 / 32);
    SUBCASE("z^2 is the closed unit disk") {
        const auto mask = filled_julia_mask(z2, g, EscapeParams::for_poly(z2, 64));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double r = std::abs(g.node(i));
            if (r < 0.97) CHECK(mask[i] == 1);
            if (r > 1.03) CHECK(mask[i] == 0);
        }
    }
    SUBCASE("z^2 - 2 is the segment") {
        const auto mask = filled_julia_mask(z2m2, g, EscapeParams::for_poly(z2m2, 200));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const cplx z = g.node(i);
            if (mask[i]) {
                CHECK(std::abs(z.imag()) <= g.h() + 1e-12);
                CHECK(std::abs(z.real()) <= 2.0 + g.h());
            }
            if (z.imag() == 0.0 && std::abs(z.real()) <= 2.0) CHECK(mask[i] == 1);
        }
    }
    SUBCASE("real coefficients give a mask symmetric in beta") {
        const ComplexPoly p({-0.75, 0, 1});
        const auto mask = filled_julia_mask(p, g, EscapeParams::for_poly(p, 100));
        for (int iy = 0; iy < g.ny(); ++iy)
            for (int ix = 0; ix < g.nx(); ++ix)
                CHECK(mask[g.index(ix, iy)] == mask[g.index(ix, g.ny() - 1 - iy)]);
    }
}

TEST_CASE("exceptional screening") {
    CHECK(is_exceptional(z2, 0.0));
    CHECK_FALSE(is_exceptional(z2, 1.0));
    CHECK_FALSE(is_exceptional(z2m1, 0.0));
    CHECK_FALSE(is_exceptional(z2m1, 0.0, 3));
    CHECK(is_exceptional(ComplexPoly({0, 0, 0, 1}), 0.0));
}
