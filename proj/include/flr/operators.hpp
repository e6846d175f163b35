#pragma once

#include <string>
#include <vector>

#include "flr/grid.hpp"
#include "flr/types.hpp"

namespace flr {

/// Nystrom discretization of an integral operator on the m weighted nodes.
/// Stored in weighted coordinates A = W^{1/2} M W^{1/2}, which makes matrix
/// orthonormality coincide with quadrature orthonormality of grid functions,
/// so the discrete operator identities hold exactly.
struct DiscretizedOperator {
    enum class Label { covariance_kernel, sobolev_kernel, composed, other };

    Grid grid;
    mat_t sym;  // m x m, symmetric
    Label label = Label::other;
};

DiscretizedOperator discretize(const mat_t& kernel_values, const Grid& grid,
                               DiscretizedOperator::Label label = DiscretizedOperator::Label::other);

/// Truncated eigensystem of a DiscretizedOperator.  Eigenvalues are clipped at
/// zero, sorted nonincreasing, and truncated at tol * lambda_1; eigenvectors
/// are rescaled from weighted coordinates to quadrature-orthonormal grid
/// functions psi_j (psi column j holds psi_j at the m weighted nodes).
class SpectralDecomposition {
public:
    SpectralDecomposition(Grid grid, vec_t eigenvalues, mat_t psi, double truncation_tol);

    const Grid& grid() const { return grid_; }
    int rank() const { return static_cast<int>(eigenvalues_.size()); }
    const vec_t& eigenvalues() const { return eigenvalues_; }
    double eigenvalue(int j) const { return eigenvalues_[j]; }
    /// Grid-function values of psi_j at the m weighted nodes (column j).
    const mat_t& psi() const { return psi_; }
    double truncation_tol() const { return truncation_tol_; }

    /// Quadrature coefficients <f, psi_j> for a grid function on the m nodes.
    vec_t coefficients(const vec_t& f) const;

private:
    Grid grid_;
    vec_t eigenvalues_;
    mat_t psi_;
    double truncation_tol_;
};

/// Symmetric eigendecomposition with clipping and relative truncation.
SpectralDecomposition eigendecompose(const DiscretizedOperator& op, double tol = 1e-12);

/// sum_j lambda_j^r <f,psi_j> psi_j.  r must be >= -1; for r < 0 only modes
/// with lambda_j >= inv_cutoff * lambda_1 contribute (inv_cutoff > 0 required).
vec_t fractional_apply(const SpectralDecomposition& dec, double r, const vec_t& f,
                       double inv_cutoff = 1e-8);

/// Index of a grid node equal to t (within 1e-12); throws domain_error if t is
/// not a node — no interpolation is provided.
int find_node_index(const Grid& grid, double t);

/// K^{1/2}(s,t) = sum_j sqrt(lambda_j) psi_j(s) psi_j(t), s and t grid nodes.
double sqrt_kernel_eval(const SpectralDecomposition& dec, double s, double t);

/// Full matrix of sqrt_kernel_eval over the m weighted nodes.
mat_t sqrt_kernel_matrix(const SpectralDecomposition& dec);

/// T = L_K^{1/2} L_C L_K^{1/2} on a shared grid, in weighted coordinates.
DiscretizedOperator compose_t_alpha(const SpectralDecomposition& lk,
                                    const DiscretizedOperator& lc);

/// N(lambda) = sum_j mu_j / (lambda + mu_j).
double effective_dimension(const std::vector<double>& mu, double lambda);

struct EffectiveDimensionCurve {
    std::vector<double> lambdas;
    std::vector<double> values;
};

EffectiveDimensionCurve effective_dimension_curve(const std::vector<double>& mu,
                                                  const std::vector<double>& lambdas);

/// || L_K^{-1/2} beta ||_{L^2,quad} for a grid function beta mostly inside the
/// retained span; more than 10% of quadrature L^2 mass outside it is an error.
double sobolev_norm(const SpectralDecomposition& lk, const vec_t& beta,
                    double inv_cutoff = 1e-8);

/// JSON dump {grid_ref, eigenvalues[], truncation_tol} with the eigenfunction
/// matrix in a CSV sidecar (column j = psi_j at nodes).
void save_spectral(const SpectralDecomposition& dec, const std::string& grid_ref,
                   const std::string& json_path, const std::string& csv_path);

}  // namespace flr
