#pragma once

#include <iosfwd>
#include <string>

#include "flr/filters.hpp"
#include "flr/grid.hpp"
#include "flr/operators.hpp"
#include "flr/sobolev_kernel.hpp"
#include "flr/types.hpp"

namespace flr {

/// Regression sample: covariate curves observed at all m+1 grid nodes plus
/// scalar responses.  Column m+1 (the node at 1) is carried for completeness
/// but never enters the left-rule sums.
struct Dataset {
    Grid grid;
    mat_t X;  // n x (m+1), row i holds X_i(r_1..r_{m+1})
    vec_t y;  // length n

    Dataset(Grid grid, mat_t X, vec_t y);

    int n() const { return static_cast<int>(X.rows()); }
};

/// Eigendecomposition of the kernel Gram G = [K(r_k, r_l)] over the m weighted
/// nodes, shared read-only across fits on the same grid.  Eigenvalues are
/// clipped at zero; the inverse square root refuses to form below a relative
/// floor of 1e-12 and reports the condition number instead.
class GramFactor {
public:
    GramFactor(const Grid& grid, const SobolevKernel& kernel);

    const Grid& grid() const { return grid_; }
    int alpha() const { return alpha_; }
    const mat_t& g() const { return g_; }
    const mat_t& g_half() const { return g_half_; }
    double condition() const;

    /// G^{-1/2} v over modes above the relative floor; throws
    /// ill_conditioned_error when any retained direction sits below it.
    vec_t inv_half_apply(const vec_t& v) const;

    static constexpr double relative_floor = 1e-12;

private:
    Grid grid_;
    int alpha_;
    mat_t g_;
    mat_t g_half_;
    vec_t eigs_;  // descending, clipped at zero
    mat_t vecs_;
};

/// Data-dependent quantities of the local estimator in symmetrized
/// coordinates: A_sym = (1/n) G^{1/2} (D X^T X D) G^{1/2} and
/// b = (1/n) D X^T y, with D = diag(w_1..w_m) and X restricted to the m
/// weighted columns.  A_sym is similar to the empirical operator, so filters
/// act on it by ordinary symmetric calculus.
struct EmpiricalSystem {
    mat_t a_sym;  // m x m symmetric PSD
    vec_t b;      // length m
};

EmpiricalSystem assemble(const Dataset& dataset, const GramFactor& gram);
EmpiricalSystem assemble(const Dataset& dataset, const SobolevKernel& kernel);

/// Fitted coefficients c with f_hat = sum_k c_k K^{1/2}(., r_k) and
/// beta_hat = sum_k c_k K(., r_k); the two share coefficients because the
/// square-root operator maps each K^{1/2} section to the matching K section.
struct SlopeEstimate {
    Grid grid;
    vec_t coeffs;  // length m
    int alpha = 1;
    double lambda = 0.0;
    FilterSpec filter;
};

SlopeEstimate fit_local(const Dataset& dataset, const GramFactor& gram,
                        const FilterSpec& filter, double lambda);
SlopeEstimate fit_local(const Dataset& dataset, const SobolevKernel& kernel,
                        const FilterSpec& filter, double lambda);

/// beta_hat evaluated at the grid's m weighted nodes.
vec_t beta_node_values(const SlopeEstimate& est);

/// <beta_hat, x_new> by the shared left-rule quadrature; x_new holds samples
/// at all m+1 nodes of the estimate's grid.
double predict(const SlopeEstimate& est, const vec_t& x_new);

/// Squared Sobolev estimation error ||beta_hat - beta_0||_W^2, computed as the
/// quadrature L^2 distance between f_hat and f_0 on the decomposition's grid
/// (the two norms agree by the square-root isometry).  `f0_coeffs` expands f_0
/// in the leading eigenfunctions of `lk`; the estimate's weighted nodes must
/// all be nodes of the decomposition grid.
double estimation_error_w(const SlopeEstimate& est, const vec_t& f0_coeffs,
                          const SpectralDecomposition& lk);

/// Excess prediction risk <beta_hat - beta_0, L_C (beta_hat - beta_0)> by
/// quadrature on the covariance operator's grid; beta0_nodes holds beta_0 at
/// that grid's m weighted nodes.
double prediction_risk(const SlopeEstimate& est, const vec_t& beta0_nodes,
                       const DiscretizedOperator& lc);

/// JSON round-trip {alpha, nodes, coeffs, lambda, filter}; weights are
/// rebuilt from consecutive node gaps.
void write_slope_json(const SlopeEstimate& est, std::ostream& os);
SlopeEstimate read_slope_json(std::istream& is);
void save_slope_json(const SlopeEstimate& est, const std::string& path);
SlopeEstimate load_slope_json(const std::string& path);

/// Dataset CSV: header `r_1,...,r_{m+1},y`, one row per observation listing
/// the covariate samples then the response.  Grid nodes live in a sidecar
/// grid CSV (see grid module), passed separately on read.
void write_dataset_csv(const Dataset& dataset, std::ostream& os);
Dataset read_dataset_csv(std::istream& is, const Grid& grid);
void save_dataset_csv(const Dataset& dataset, const std::string& path);
Dataset load_dataset_csv(const std::string& path, const Grid& grid);

}  // namespace flr
