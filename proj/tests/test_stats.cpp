#include <algorithm>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "qbrolin/errors.hpp"
#include "qbrolin/stats.hpp"

using namespace qbrolin;

namespace {
const ComplexPoly z2({0.0, 0.0, 1.0});
const ComplexPoly z2m1({-1.0, 0.0, 1.0});
const ComplexPoly z2m2({-2.0, 0.0, 1.0});
const double kLog2 = std::log(2.0);

QPolynomial real_poly(std::vector<double> c) { return QPolynomial::from_real(c); }
}  // namespace

TEST_CASE("backward sampler") {
    const auto a = sample_mu(z2, 5000, 7);
    const auto b = sample_mu(z2, 5000, 7);
    CHECK(a == b);
    CHECK(sample_mu(z2, 5000, 8) != a);
    // A prefix of a longer draw is the shorter draw.
    const auto c = sample_mu(z2, 9000, 7);
    CHECK(std::equal(a.begin(), a.end(), c.begin()));
    for (cplx z : a) CHECK(std::abs(std::abs(z) - 1.0) <= 1e-12);

    // z^2 - 2: samples follow the arcsine law on [-2, 2].
    auto s = sample_mu(z2m2, 20000, 11);
    std::vector<double> x;
    for (cplx z : s) {
        CHECK(std::abs(z.imag()) <= 1e-9);
        x.push_back(z.real());
    }
    std::sort(x.begin(), x.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double F = oracle::arcsine_cdf(x[i]);
        ks = std::max({ks, F - double(i) / x.size(), double(i + 1) / x.size() - F});
    }
    CHECK(ks <= 0.015);

    // Chain tails are forward orbits, and column 0 is the plain sample.
    const BackwardOrbitSampler chain(z2m1, 3, 1.0, 40);
    const auto orb = chain.orbits(100, 41);
    const auto heads = chain.sample(100);
    for (std::size_t s = 0; s < 100; ++s) {
        CHECK(orb[s * 41] == heads[s]);
        CHECK(orb[s * 41 + 40] == cplx(1.0));
        for (int j = 0; j + 1 < 41; ++j) CHECK(std::abs(z2m1(orb[s * 41 + j]) - orb[s * 41 + j + 1]) <= 1e-12);
    }
    CHECK_THROWS_AS(chain.orbits(10, 42), PreconditionViolation);

    CHECK_THROWS_AS(BackwardOrbitSampler(z2, 1, 0.0), ExceptionalTarget);
    CHECK_THROWS_AS(BackwardOrbitSampler(ComplexPoly({0.0, 1.0}), 1), PreconditionViolation);
}

TEST_CASE("Lyapunov exponent on the slice") {
    const auto r = lyapunov_slice(z2, 2000, 3);
    CHECK(r.value == doctest::Approx(kLog2).epsilon(1e-12));
    CHECK(r.to_json().contains("stderr"));

    // Chebyshev: log 2 + G(0) with G(0) = 0.
    const auto c = lyapunov_slice(z2m2, 40000, 5);
    CHECK(std::abs(c.value - kLog2) <= 5 * c.std_error + 0.01);

    // z^2 - 1: the critical point is in K, so the exponent is log 2 as well.
    const auto m = lyapunov_slice(z2m1, 40000, 5);
    CHECK(std::abs(m.value - kLog2) <= 5 * m.std_error + 0.01);
}

TEST_CASE("Lyapunov exponents along and across slices") {
    const auto q2 = real_poly({0, 0, 1});
    const SlicePoint q0{std::cos(0.3), std::sin(0.3), ImaginaryUnit(1, 2, 3)};
    CHECK(lyapunov_slice_direction(q2, q0, 20) == doctest::Approx(kLog2).epsilon(1e-9));
    CHECK(std::abs(lyapunov_sphere_direction(q2, q0, 20, 1e-3)) <= 1e-9);
    const auto cubic = real_poly({0.2, -0.5, 0.0, 1.0});
    CHECK(std::abs(lyapunov_sphere_direction(cubic, {0.1, 0.4, ImaginaryUnit::k()}, 10, 1e-4)) <= 1e-8);
    CHECK_THROWS_AS(lyapunov_sphere_direction(q2, {0.5, 0.0, {}}, 5, 1e-3), PreconditionViolation);
}

TEST_CASE("transfer operator") {
    const auto re2 = [](cplx z) { return z.real() * z.real(); };
    const auto L = transfer_powers(z2, re2, 1.0, 6);
    for (int n = 0; n <= 6; ++n) {
        double direct = 0.0;
        const auto roots = oracle::roots_of_unity(1 << n);
        for (cplx w : roots) direct += re2(w) / roots.size();
        CHECK(L[n] == doctest::Approx(direct).epsilon(1e-12));
    }
    CHECK(transfer_apply(z2m1, [](cplx) { return 3.0; }, {0.2, 0.1}) == doctest::Approx(3.0));

    // Cubic: Lambda f(z) = (1/3) sum f over the fiber.
    const ComplexPoly cubic({0.0, -1.0, 0.0, 1.0});
    const auto f = [](cplx z) { return z.real(); };
    CHECK(std::abs(transfer_apply(cubic, f, 0.3)) <= 1e-12);  // roots sum to 0
}

TEST_CASE("tail slope fit") {
    std::vector<double> x, y;
    for (int n = 0; n < 10; ++n) {
        x.push_back(n);
        y.push_back(n < 4 ? 5.0 : 0.7 * n - 1.0);
    }
    const auto fit = fit_tail_slope(x, y);
    CHECK(fit.first == 5);
    CHECK(fit.slope == doctest::Approx(0.7));
    CHECK(fit.intercept == doctest::Approx(-1.0));
    CHECK(fit.residual <= 1e-12);
    CHECK_THROWS_AS(fit_tail_slope({1.0}, {1.0}), PreconditionViolation);
}

TEST_CASE("correlations of z^2 - 2") {
    // With x = 2 cos t under arcsine, p^n x = 2 cos(2^n t): Cov(x, p^n x) = 2 [n = 0].
    const auto& re = panel_function("re");
    const auto m = mixing_correlation(z2m2, re, re, 6, 20000, 9);
    REQUIRE(m.series.size() == 7);
    CHECK(std::abs(m.series[0].correlation - 2.0) <= 5 * m.series[0].std_error + 1e-3);
    for (int n = 1; n <= 6; ++n) CHECK(std::abs(m.series[n].correlation) <= 5 * m.series[n].std_error + 1e-3);

    // z^2 - 1 with (Re, |q|^2): decays geometrically.
    const auto d = mixing_correlation(z2m1, re, panel_function("norm2"), 8, 20000, 4);
    CHECK(d.fit.slope < -0.3);
    for (const auto& pt : d.series) CHECK(std::isfinite(pt.correlation));
}

TEST_CASE("KS distance") {
    std::vector<double> q;
    const int N = 1000;
    for (int k = 0; k < N; ++k) {
        // Normal quantiles by bisection on erfc.
        const double target = (k + 0.5) / N;
        double lo = -10, hi = 10;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            (0.5 * std::erfc(-mid / std::numbers::sqrt2) < target ? lo : hi) = mid;
        }
        q.push_back(0.5 * (lo + hi));
    }
    CHECK(ks_to_gaussian(q, 1.0) == doctest::Approx(0.5 / N).epsilon(1e-6));
    CHECK(ks_to_gaussian(q, 2.0) > 0.1);
    CHECK_THROWS_AS(ks_to_gaussian(q, 0.0), PreconditionViolation);
}

TEST_CASE("CLT harness") {
    const TestFunction one{"one", [](const Quaternion&) { return 1.0; }, 1e300, true};
    const auto r0 = clt_harness(z2m2, one, 50, 1000, 1);
    CHECK(r0.degenerate);

    const auto r = clt_harness(z2m1, panel_function("re"), 64, 4000, 2, 50);
    CHECK_FALSE(r.degenerate);
    CHECK(r.sigma_hat > 0.1);
    CHECK(r.null_p95 > 0.0);
    CHECK(r.null_p95 < 0.05);
    CHECK(r.ks < 0.1);
    TestFunction nonaxial{"x", [](const Quaternion& q) { return q.x; }};
    CHECK_THROWS_AS(clt_harness(z2m1, nonaxial, 10, 100, 1), PreconditionViolation);
}

TEST_CASE("separated sets and topological entropy") {
    const auto cheb = real_poly({-2, 0, 1});
    const AxialBox line{-2.0, 2.0, 0.0};
    const SeparatedSetProblem prob(cheb, line, 8, 4096);
    CHECK(prob.candidate_count() == 16385);
    // Separated counts grow with n and shrink with eps.
    CHECK(prob.separated_count(4, 0.1) >= prob.separated_count(3, 0.1));
    CHECK(prob.separated_count(4, 0.05) >= prob.separated_count(4, 0.1));
    // At n = 1 this is eps-packing of [-2, 2]: about 4 / eps points.
    const auto n1 = prob.separated_count(1, 0.1);
    CHECK(n1 >= 39);
    CHECK(n1 <= 41);
    const auto h = topological_entropy(cheb, line, 8, {0.2, 0.1}, 4096);
    CHECK(std::abs(h.value - kLog2) <= 0.1);

    // q^2 on a box containing the closed unit ball: entropy log 2.
    const auto q2 = real_poly({0, 0, 1});
    const auto hq = topological_entropy(q2, {-1.1, 1.1, 1.1}, 6, {0.5}, 64);
    CHECK(hq.value == doctest::Approx(kLog2).epsilon(0.25));
    CHECK_THROWS_AS(SeparatedSetProblem(q2, line, 0, 10), PreconditionViolation);

    // One point is enough once eps exceeds the diameter.
    CHECK(separated_count(q2, {-1.1, 1.1, 1.1}, 1, 10.0, 64) == 1);
    // Degree one: no growth.
    const auto shift = real_poly({0.0, 1.0});
    const auto h1 = topological_entropy(shift, {-3, 3, 3}, 6, {0.3}, 16);
    CHECK(SeparatedSetProblem(shift, {-3, 3, 3}, 2, 16).candidate_count() > 0);
    CHECK(h1.value <= 0.1);
}

TEST_CASE("partition entropy") {
    const auto s = sample_mu(z2m2, 40000, 21);
    const auto r = partition_entropy(z2m2, s, interval_partition(-2, 2, 2, 1), 10);
    CHECK(std::abs(r.value - kLog2) <= 5 * r.std_error + 0.01);
    // A finer partition is still generating for the same map.
    const auto r4 = partition_entropy(z2m2, s, interval_partition(-2, 2, 4, 1), 8);
    CHECK(std::abs(r4.value - kLog2) <= 5 * r4.std_error + 0.02);
    CHECK_THROWS_AS(partition_entropy(z2m2, s, {}, 5), PreconditionViolation);
}
