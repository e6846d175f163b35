#include "flr/bernoulli.hpp"

#include <string>

#include "flr/errors.hpp"

namespace flr {

namespace {

// Pascal triangle of binomial coefficients through row n (exact in double for
// the small degrees used here).
std::vector<std::vector<double>> binomials(int n) {
    std::vector<std::vector<double>> c(n + 1);
    for (int i = 0; i <= n; ++i) {
        c[i].assign(i + 1, 1.0);
        for (int j = 1; j < i; ++j) c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
    }
    return c;
}

}  // namespace

BernoulliTable::BernoulliTable(int max_degree) : max_degree_(max_degree) {
    if (max_degree < 0) throw domain_error("BernoulliTable: negative max degree");
    auto C = binomials(max_degree + 1);

    numbers_.assign(max_degree + 1, 0.0);
    numbers_[0] = 1.0;
    for (int k = 1; k <= max_degree; ++k) {
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += C[k + 1][j] * numbers_[j];
        numbers_[k] = -s / static_cast<double>(k + 1);
    }

    coeffs_.resize(max_degree + 1);
    for (int k = 0; k <= max_degree; ++k) {
        coeffs_[k].resize(k + 1);
        for (int j = 0; j <= k; ++j) coeffs_[k][j] = C[k][j] * numbers_[j];
    }
}

double BernoulliTable::poly(int k, double t) const {
    if (k < 0 || k > max_degree_)
        throw capacity_error("BernoulliTable: degree " + std::to_string(k) +
                             " beyond table maximum " + std::to_string(max_degree_));
    // Horner over the umbral coefficients: sum_j coeffs[k][j] * t^{k-j}.
    double acc = coeffs_[k][0];
    for (int j = 1; j <= k; ++j) acc = acc * t + coeffs_[k][j];
    return acc;
}

double BernoulliTable::number(int k) const {
    if (k < 0 || k > max_degree_)
        throw capacity_error("BernoulliTable: number index beyond table");
    return numbers_[k];
}

}  // namespace flr
