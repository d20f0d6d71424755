#pragma once

#include <random>

#include "qbrolin/qpolynomial.hpp"

namespace qtest {

using qbrolin::cplx;
using qbrolin::Quaternion;

inline double qdist(const Quaternion& a, const Quaternion& b) { return (a - b).norm(); }

inline Quaternion random_quaternion(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    return {n(rng), n(rng), n(rng), n(rng)};
}

inline qbrolin::QPolynomial random_qpoly(std::mt19937_64& rng, int degree) {
    std::vector<Quaternion> c;
    for (int k = 0; k <= degree; ++k) c.push_back(random_quaternion(rng));
    return qbrolin::QPolynomial(std::move(c));
}

inline double coeff_dist(const qbrolin::QPolynomial& f, const qbrolin::QPolynomial& g) {
    const std::size_t n = std::max(f.coeffs().size(), g.coeffs().size());
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const Quaternion a = k < f.coeffs().size() ? f.coeffs()[k] : Quaternion();
        const Quaternion b = k < g.coeffs().size() ? g.coeffs()[k] : Quaternion();
        m = std::max(m, qdist(a, b));
    }
    return m;
}

}  // namespace qtest
