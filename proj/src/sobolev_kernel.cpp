#include "flr/sobolev_kernel.hpp"

#include <cmath>
#include <string>

#include "flr/errors.hpp"

namespace flr {

SobolevKernel::SobolevKernel(int alpha, std::shared_ptr<const BernoulliTable> table)
    : alpha_(alpha), table_(std::move(table)) {
    if (alpha < 1)
        throw domain_error("SobolevKernel: alpha must be a positive integer, got " +
                           std::to_string(alpha));
    if (!table_) table_ = std::make_shared<BernoulliTable>(std::max(2 * alpha, BernoulliTable::default_max_degree));
    if (table_->max_degree() < 2 * alpha)
        throw capacity_error("SobolevKernel: Bernoulli table too small for alpha = " +
                             std::to_string(alpha));

    inv_fact_sq_.resize(static_cast<std::size_t>(alpha) + 1);
    double fact = 1.0;
    for (int k = 0; k <= alpha; ++k) {
        if (k > 0) fact *= static_cast<double>(k);
        inv_fact_sq_[static_cast<std::size_t>(k)] = 1.0 / (fact * fact);
    }
    double fact2a = 1.0;
    for (int k = 2; k <= 2 * alpha; ++k) fact2a *= static_cast<double>(k);
    tail_coef_ = ((alpha % 2 == 0) ? -1.0 : 1.0) / fact2a;
}

double SobolevKernel::eval(double s, double t) const {
    if (!(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0))
        throw domain_error("SobolevKernel: arguments must lie in [0,1]");
    double acc = 0.0;
    for (int k = 0; k <= alpha_; ++k)
        acc += table_->poly(k, s) * table_->poly(k, t) * inv_fact_sq_[static_cast<std::size_t>(k)];
    acc += tail_coef_ * table_->poly(2 * alpha_, std::abs(s - t));
    return acc;
}

mat_t kernel_matrix(const SobolevKernel& kernel, const Grid& grid) {
    const int m = grid.m();
    mat_t g(m, m);
    for (int k = 0; k < m; ++k) {
        for (int l = k; l < m; ++l) {
            double v = kernel.eval(grid.node(k), grid.node(l));
            g(k, l) = v;
            g(l, k) = v;
        }
    }
    return g;
}

}  // namespace flr
