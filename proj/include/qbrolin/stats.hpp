#pragma once

// Statistics of the equilibrium measure: backward random orbit sampling,
// Lyapunov exponents, the transfer operator, correlation decay, the CLT
// harness and entropy estimators.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "qbrolin/delta_star.hpp"
#include "qbrolin/measures.hpp"
#include "qbrolin/qpolynomial.hpp"

namespace qbrolin {

struct EstimateReport {
    std::string name;
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    nlohmann::json params = nlohmann::json::object();
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

/// Samples of mu_I: each sample is the end of an independent backward chain
/// of length burn_in from `start`, choosing each preimage with probability
/// multiplicity / d. Samples are generated in fixed blocks of
/// kSampleBlock, block b drawing from derive_seed(seed, b).
class BackwardOrbitSampler {
public:
    static constexpr std::size_t kSampleBlock = 4096;

    /// burn_in < 0 selects the policy default. Throws ExceptionalTarget for
    /// an exceptional start and PreconditionViolation for degree < 2.
    BackwardOrbitSampler(ComplexPoly p, std::uint64_t seed, cplx start = 1.0, int burn_in = -1);

    std::vector<cplx> sample(std::size_t count) const;
    /// count * length points: row s holds sample s and its first length - 1
    /// forward images, read off the chain. Requires length <= burn_in + 1.
    std::vector<cplx> orbits(std::size_t count, int length) const;
    const ComplexPoly& polynomial() const { return p_; }
    int burn_in() const { return burn_in_; }

private:
    ComplexPoly p_;
    std::uint64_t seed_;
    cplx start_;
    int burn_in_;
};

std::vector<cplx> sample_mu(const ComplexPoly& p, std::size_t count, std::uint64_t seed,
                            cplx start = 1.0);

/// Birkhoff average of log|p'| over mu samples. Samples within the policy
/// cluster tolerance of a critical point are redrawn and counted in
/// params["degenerate_resampled"].
EstimateReport lyapunov_slice(const ComplexPoly& p, std::size_t n_samples, std::uint64_t seed);

/// (1/n) log|(p_I^n)'(alpha + i beta)| along the orbit of q0.
double lyapunov_slice_direction(const QPolynomial& p, const SlicePoint& q0, int n);

/// Growth rate in the direction tangent to the sphere S_{q0}: q0 and
/// q0' = alpha + I' beta, I' = I tilted by eps, are iterated in H and the
/// geodesic angle between the imaginary directions of p^n(q0) and p^n(q0')
/// is compared with the initial angle. Throws PreconditionViolation for
/// real q0 and NumericalFailure if the orbit lands on the real axis.
double lyapunov_sphere_direction(const QPolynomial& p, const SlicePoint& q0, int n, double eps);

/// (1/d) sum over p(w) = z of f(w), with multiplicity.
double transfer_apply(const ComplexPoly& p, const SliceFunction& f, cplx z);
/// Lambda^k f(z) for k = 0..n_max from one traversal of the preimage tree.
std::vector<double> transfer_powers(const ComplexPoly& p, const SliceFunction& f, cplx z, int n_max);

/// Least-squares slope of y against x on the last max(3, size/2) points,
/// with the residual standard deviation.
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
    std::size_t first = 0;
};
SlopeFit fit_tail_slope(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationPoint {
    int n = 0;
    double correlation = 0.0;
    double std_error = 0.0;
};

struct MixingResult {
    std::vector<CorrelationPoint> series;
    SlopeFit fit;  // of log|correlation| against n
};

/// Correlations <mu, (phi o p^n) psi> - <mu, phi><mu, psi> for n = 0..n_max.
/// Uses the duality <mu, (phi o p^n) psi> = <mu, phi Lambda^n psi> with
/// Lambda^n psi evaluated exactly on each sample's depth-n preimage tree.
/// Axially symmetric panel functions are evaluated on C_i; others are
/// averaged over the level-2 sphere quadrature.
MixingResult mixing_correlation(const ComplexPoly& p, const TestFunction& phi, const TestFunction& psi,
                                int n_max, std::size_t samples, std::uint64_t seed);

struct CltResult {
    double ks = 0.0;         // distance of S_n / sqrt(n) to N(0, sigma_hat^2)
    double sigma_hat = 0.0;
    double mean_phi = 0.0;   // the subtracted <mu, phi>
    double null_p95 = 0.0;   // 95th percentile of KS for same-size Gaussian samples
    bool degenerate = false; // sigma_hat < 1e-6
    std::size_t n_samples = 0;
    int n_terms = 0;
};

/// Birkhoff sums of phi - <mu, phi> along forward orbits of mu samples,
/// taken from backward chains of length burn_in + n_terms.
/// phi must be axially symmetric.
CltResult clt_harness(const ComplexPoly& p, const TestFunction& phi, int n_terms, std::size_t n_samples,
                      std::uint64_t seed, int null_replicates = 200);

/// Kolmogorov-Smirnov distance of samples to N(0, sigma^2).
double ks_to_gaussian(std::vector<double> x, double sigma);

/// Axially symmetric compact set {alpha + J beta : (alpha, beta) in box,
/// beta >= 0, J in S}.
struct AxialBox {
    double alpha_min = -1.0;
    double alpha_max = 1.0;
    double beta_max = 1.0;
};

/// Candidate points for separated sets: grid nodes of the box at spacing
/// 1 / grid_density that lie in the filled Julia set and have a grid
/// neighbour outside it, each carried to the six level-1 quadrature units
/// (real nodes once). Slice orbits are stored for n_max steps.
class SeparatedSetProblem {
public:
    SeparatedSetProblem(const QPolynomial& p, const AxialBox& box, int n_max, double grid_density);
    /// Greedy (n, eps)-separated subset size under dis_n.
    std::size_t separated_count(int n, double eps) const;
    std::size_t candidate_count() const { return cand_.size(); }
    int n_max() const { return n_max_; }

private:
    struct Candidate {
        std::uint32_t slice;
        std::uint8_t unit;
    };
    int n_max_;
    std::vector<cplx> orbits_;  // n_max iterates per slice point, contiguous
    std::vector<Candidate> cand_;
    std::vector<std::array<double, 3>> units_;
};

std::size_t separated_count(const QPolynomial& p, const AxialBox& box, int n, double eps,
                            double grid_density);

/// sup over eps of the fitted slope of log N(K, n, eps) against n, n = 1..n_max.
EstimateReport topological_entropy(const QPolynomial& p, const AxialBox& box, int n_max,
                                   const std::vector<double>& eps_list, double grid_density);

/// Cell S x A with A = [alpha_lo, alpha_hi) x [beta_lo, beta_hi) in (alpha, |beta|).
struct SliceCell {
    double alpha_lo, alpha_hi, beta_lo, beta_hi;
};
/// m equal cells of [lo, hi) in alpha, each spanning |beta| in [0, beta_max).
std::vector<SliceCell> interval_partition(double lo, double hi, int m, double beta_max);

/// H(nu, xi^n) / n from itinerary coding of samples, Miller-Madow corrected,
/// reported as the tail slope of H_n against n for n = 1..n_max. The
/// standard error comes from `batches` disjoint sample batches. Points in no
/// cell share one extra code.
EstimateReport partition_entropy(const ComplexPoly& p, const std::vector<cplx>& samples,
                                 const std::vector<SliceCell>& cells, int n_max, int batches = 10);

}  // namespace qbrolin
