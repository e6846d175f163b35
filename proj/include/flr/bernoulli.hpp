#pragma once

#include <vector>

namespace flr {

/// Bernoulli polynomials B_k(t) through a fixed maximum degree.
///
/// Values come from the explicit umbral expansion
///   B_k(t) = sum_{j=0}^{k} C(k,j) B_j t^{k-j}
/// with the Bernoulli numbers B_j generated once by the defining recurrence
///   sum_{j=0}^{k} C(k+1,j) B_j = 0.
/// Degrees of interest stay small (2*alpha_max), so the closed form is exact
/// to double precision and needs no stabilization.
class BernoulliTable {
public:
    static constexpr int default_max_degree = 16;  // supports kernels up to alpha = 8

    explicit BernoulliTable(int max_degree = default_max_degree);

    /// B_k(t).  Throws capacity_error for k beyond the table.
    double poly(int k, double t) const;

    /// Bernoulli number B_k = B_k(0).
    double number(int k) const;

    int max_degree() const { return max_degree_; }

private:
    int max_degree_;
    std::vector<double> numbers_;                     // B_0..B_max
    std::vector<std::vector<double>> coeffs_;         // coeffs_[k][j] = C(k,j)*B_j
};

}  // namespace flr
