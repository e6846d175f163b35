#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "flr/operators.hpp"
#include "flr/types.hpp"

namespace flr {

/// Randomized greedy sign-code construction: draws +-1 vectors of the given
/// length and keeps those at Hamming distance >= length/2 from every kept
/// codeword, until ceil(exp(length/8)) survive.  Throws when max_attempts
/// candidates fail to reach the target (retry with a fresh seed).
std::vector<std::vector<int>> varshamov_gilbert(int code_length, std::uint64_t seed,
                                                long long max_attempts = 1000000);

/// Hard-instance family for the lower-bound mechanics: slope functions
/// beta_i = sum_{j=J+1}^{2J} (1/sqrt J) iota^{(i)}_{j-J} sqrt(lambda_j)
/// mu_j^theta psi_j, one per codeword, carried as spectral coefficients.
struct PackingSet {
    int modes = 0;  // J
    double theta = 0.0;
    std::vector<std::vector<int>> codewords;
    mat_t slope_coeffs;      // J x L, column i = coefficients of beta_i on modes J+1..2J
    vec_t mu;                // mu_1..mu_{2J}
    double separation_lower = 0.0;  // min pairwise ||beta_i - beta_j||_W^2

    int size() const { return static_cast<int>(codewords.size()); }
};

/// Build the family over modes J+1..2J of the decomposition; `mu` holds at
/// least 2J composed-operator eigenvalues.
PackingSet build_packing_slopes(const SpectralDecomposition& lk, const vec_t& mu, double theta,
                                const std::vector<std::vector<int>>& codewords);

/// ||beta_i1 - beta_i2||_W^2 from the stored coefficients.
double packing_separation(const PackingSet& ps, int i1, int i2);

/// KL divergence between the single-observation laws of codewords i1, i2 at
/// noise level sigma: (1/(2 sigma^2)) sum_j (1/J) mu_j^{1+2 theta} |iota -
/// iota'|_j^2 over the packing modes.
double kl_divergence_pair(const PackingSet& ps, int i1, int i2, double sigma);

double max_pairwise_kl(const PackingSet& ps, double sigma);

/// Sample-size budget of the information bound, by arithmetic alone: for each
/// N take J = ceil(a N^{p/(1+p+2 theta)}), packing log-size J/8, per-sample KL
/// bound (2/sigma^2) mu_J^{1+2 theta}, and report N * KL / log-size, which
/// must stay below 1 for the argument to close.
struct FanoBudgetRow {
    long long n = 0;
    long long modes = 0;  // J
    double log_packing = 0.0;
    double kl_bound = 0.0;
    double ratio = 0.0;
};

struct FanoBudgetReport {
    double p = 0.0;
    double theta = 0.0;
    double sigma = 0.0;
    double a = 16.0;
    std::vector<FanoBudgetRow> rows;
};

FanoBudgetReport fano_budget_report(double p, double theta, double sigma,
                                    const std::vector<long long>& n_list, double a = 16.0);

/// JSON dump {J, theta, codewords, mu, slope_coeffs, separation_lower}.
void write_packing_json(const PackingSet& ps, std::ostream& os);
void save_packing_json(const PackingSet& ps, const std::string& path);

}  // namespace flr
