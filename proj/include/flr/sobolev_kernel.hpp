#pragma once

#include <memory>

#include "flr/bernoulli.hpp"
#include "flr/grid.hpp"
#include "flr/types.hpp"

namespace flr {

/// Reproducing kernel of the order-alpha Sobolev space on [0,1] under the
/// unanchored inner product:
///
///   K_alpha(s,t) = sum_{k=0}^{alpha} B_k(s) B_k(t) / (k!)^2
///                + (-1)^{alpha+1} B_{2alpha}(|s-t|) / (2alpha)!
///
/// Defined for integer alpha >= 1 only; fractional orders are rejected.
class SobolevKernel {
public:
    explicit SobolevKernel(int alpha,
                           std::shared_ptr<const BernoulliTable> table = nullptr);

    int alpha() const { return alpha_; }
    const BernoulliTable& table() const { return *table_; }

    /// K_alpha(s,t) for s,t in [0,1].
    double eval(double s, double t) const;

private:
    int alpha_;
    std::shared_ptr<const BernoulliTable> table_;
    std::vector<double> inv_fact_sq_;  // 1/(k!)^2, k = 0..alpha
    double tail_coef_;                 // (-1)^{alpha+1}/(2alpha)!
};

/// Gram matrix G_{kl} = K(r_k, r_l) over the m weighted nodes r_1..r_m.
/// Assembled from the upper triangle, so G is symmetric exactly.
mat_t kernel_matrix(const SobolevKernel& kernel, const Grid& grid);

}  // namespace flr
