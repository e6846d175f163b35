#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "flr/estimator.hpp"
#include "flr/operators.hpp"
#include "flr/types.hpp"

namespace flr {

struct NoiseSpec {
    enum class Law { gaussian };

    double sigma = 0.0;
    Law law = Law::gaussian;
};

/// Synthetic regression truth with the covariance aligned to the kernel
/// eigenbasis: nu_j = mu_j / lambda_j with mu_j = j^{-1/p}, so the composed
/// operator has eigenpairs (mu_j, psi_j) exactly and both the spectral decay
/// exponent p and the source exponent theta are certifiable by construction.
/// f0 = mu^theta .* g0 with a seeded unit-norm certificate g0, and
/// beta0 = sum_j sqrt(lambda_j) f0_j psi_j.
struct GroundTruth {
    std::shared_ptr<const SpectralDecomposition> lk;
    int alpha = 1;
    double p = 0.5;
    double theta = 0.0;
    int modes = 0;  // J
    double sigma = 0.0;

    vec_t mu;        // j^{-1/p}, j = 1..J
    vec_t nu;        // mu_j / lambda_j
    vec_t g0;        // unit norm
    vec_t f0;        // mu^theta .* g0
    vec_t psi_last;  // Nystrom extension of psi_1..psi_J to the weightless node at 1
    double kappa_sq = 0.0;  // sum_j nu_j / lambda_j, the E||X||^2 budget
};

GroundTruth build_ground_truth(std::shared_ptr<const SpectralDecomposition> lk, int alpha,
                               double p, double theta, int modes, std::uint64_t seed);

/// Largest mode count a truth on `lk` supports: at most `cap`, at most half the
/// retained rank, and only eigenvalues at least 1e-11 of the top -- a decade
/// above the decomposition's own retention cutoff, where the computed pairs are
/// still trustworthy.
int default_mode_count(const SpectralDecomposition& lk, int cap = 64);

/// Covariance operator sum_j nu_j psi_j psi_j^T in weighted coordinates.
DiscretizedOperator build_covariance(const GroundTruth& gt);

/// beta0 at the decomposition grid's m weighted nodes.
vec_t beta0_node_values(const GroundTruth& gt);

/// n Gaussian covariate curves X_i = sum_j sqrt(nu_j) xi_ij psi_j sampled at
/// all m+1 nodes of the decomposition grid; deterministic per seed.
mat_t sample_x(const GroundTruth& gt, int n, std::uint64_t seed);

/// Dataset on `grid` (each node must also be a decomposition grid node):
/// covariates from the model above, responses computed spectrally as
/// y_i = sum_j xi_ij sqrt(nu_j lambda_j) f0_j + sigma eps_i -- the exact
/// truncated-basis value of <beta0, X_i>, so quadrature error enters only
/// through the estimator.  The same seed reproduces sample_x's curves.
Dataset gen_dataset(const GroundTruth& gt, const Grid& grid, int n, const NoiseSpec& noise,
                    std::uint64_t seed);

/// Fourth-moment ratios E<X,f>^4 / (E<X,f>^2)^2 along random unit directions;
/// approximately 3 for the Gaussian design.
struct KurtosisReport {
    int n_mc = 0;
    std::vector<double> ratios;  // one per probed direction
};

KurtosisReport kurtosis_probe(const GroundTruth& gt, int n_mc, std::uint64_t seed,
                              int directions = 5);

/// JSON dump {p, theta, J, sigma, mu, nu, g0, kappa_sq}.
void write_ground_truth_json(const GroundTruth& gt, std::ostream& os);
void save_ground_truth_json(const GroundTruth& gt, const std::string& path);

}  // namespace flr
