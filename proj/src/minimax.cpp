#include "flr/minimax.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <utility>

#include "flr/errors.hpp"
#include "flr/rng.hpp"

namespace flr {

namespace {

int hamming(const std::vector<int>& a, const std::vector<int>& b) {
    int d = 0;
    for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] != b[k]) ? 1 : 0;
    return d;
}

}  // namespace

std::vector<std::vector<int>> varshamov_gilbert(int code_length, std::uint64_t seed,
                                                long long max_attempts) {
    if (code_length < 8) throw domain_error("varshamov_gilbert: code length must be >= 8");
    if (max_attempts < 1) throw domain_error("varshamov_gilbert: need at least one attempt");
    const auto target =
        static_cast<std::size_t>(std::ceil(std::exp(static_cast<double>(code_length) / 8.0)));
    const int min_distance = code_length / 2;

    RandomStream rs(derive_seed(seed, "vg"));
    std::vector<std::vector<int>> kept;
    kept.reserve(target);
    for (long long attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<int> candidate(static_cast<std::size_t>(code_length));
        for (auto& s : candidate) s = rs.sign();
        bool separated = true;
        for (const auto& c : kept)
            if (hamming(candidate, c) < min_distance) {
                separated = false;
                break;
            }
        if (separated) {
            kept.push_back(std::move(candidate));
            if (kept.size() >= target) return kept;
        }
    }
    throw error("varshamov_gilbert: only " + std::to_string(kept.size()) + " of " +
                std::to_string(target) + " codewords found in " + std::to_string(max_attempts) +
                " attempts; retry with a different seed");
}

PackingSet build_packing_slopes(const SpectralDecomposition& lk, const vec_t& mu, double theta,
                                const std::vector<std::vector<int>>& codewords) {
    if (codewords.empty()) throw shape_error("packing: no codewords");
    const int modes = static_cast<int>(codewords.front().size());
    for (const auto& c : codewords)
        if (static_cast<int>(c.size()) != modes)
            throw shape_error("packing: codeword lengths disagree");
    if (2 * modes > lk.rank())
        throw capacity_error("packing: modes " + std::to_string(modes) + "+1.." +
                             std::to_string(2 * modes) + " exceed retained rank " +
                             std::to_string(lk.rank()));
    if (mu.size() < 2 * modes)
        throw shape_error("packing: spectrum holds " + std::to_string(mu.size()) +
                          " eigenvalues, need " + std::to_string(2 * modes));

    PackingSet ps;
    ps.modes = modes;
    ps.theta = theta;
    ps.codewords = codewords;
    ps.mu = mu.head(2 * modes);

    const double inv_root = 1.0 / std::sqrt(static_cast<double>(modes));
    ps.slope_coeffs.resize(modes, static_cast<Eigen::Index>(codewords.size()));
    for (std::size_t i = 0; i < codewords.size(); ++i)
        for (int k = 0; k < modes; ++k) {
            const int j = modes + k;  // zero-based index of mode J+1+k
            ps.slope_coeffs(k, static_cast<Eigen::Index>(i)) =
                inv_root * std::sqrt(lk.eigenvalue(j)) * std::pow(ps.mu[j], theta) *
                static_cast<double>(codewords[i][static_cast<std::size_t>(k)]);
        }

    ps.separation_lower = std::numeric_limits<double>::infinity();
    for (int i1 = 0; i1 < ps.size(); ++i1)
        for (int i2 = i1 + 1; i2 < ps.size(); ++i2)
            ps.separation_lower = std::min(ps.separation_lower, packing_separation(ps, i1, i2));
    return ps;
}

double packing_separation(const PackingSet& ps, int i1, int i2) {
    if (i1 < 0 || i1 >= ps.size() || i2 < 0 || i2 >= ps.size())
        throw domain_error("packing: codeword index out of range");
    // ||beta||_W^2 = sum a_j^2 / lambda_j strips the sqrt(lambda_j) factor:
    // each differing coordinate contributes (1/J) mu_j^{2 theta} |iota-iota'|^2.
    double total = 0.0;
    const double inv_modes = 1.0 / static_cast<double>(ps.modes);
    for (int k = 0; k < ps.modes; ++k) {
        const double delta = static_cast<double>(ps.codewords[static_cast<std::size_t>(i1)][static_cast<std::size_t>(k)] -
                                                 ps.codewords[static_cast<std::size_t>(i2)][static_cast<std::size_t>(k)]);
        const double mu_j = ps.mu[ps.modes + k];
        total += inv_modes * std::pow(mu_j, 2.0 * ps.theta) * delta * delta;
    }
    return total;
}

double kl_divergence_pair(const PackingSet& ps, int i1, int i2, double sigma) {
    if (!(sigma > 0.0)) throw domain_error("kl_divergence_pair: sigma must be positive");
    if (i1 < 0 || i1 >= ps.size() || i2 < 0 || i2 >= ps.size())
        throw domain_error("kl_divergence_pair: codeword index out of range");
    double total = 0.0;
    const double inv_modes = 1.0 / static_cast<double>(ps.modes);
    for (int k = 0; k < ps.modes; ++k) {
        const double delta = static_cast<double>(ps.codewords[static_cast<std::size_t>(i1)][static_cast<std::size_t>(k)] -
                                                 ps.codewords[static_cast<std::size_t>(i2)][static_cast<std::size_t>(k)]);
        const double mu_j = ps.mu[ps.modes + k];
        total += inv_modes * std::pow(mu_j, 1.0 + 2.0 * ps.theta) * delta * delta;
    }
    return total / (2.0 * sigma * sigma);
}

double max_pairwise_kl(const PackingSet& ps, double sigma) {
    double worst = 0.0;
    for (int i1 = 0; i1 < ps.size(); ++i1)
        for (int i2 = i1 + 1; i2 < ps.size(); ++i2)
            worst = std::max(worst, kl_divergence_pair(ps, i1, i2, sigma));
    return worst;
}

FanoBudgetReport fano_budget_report(double p, double theta, double sigma,
                                    const std::vector<long long>& n_list, double a) {
    if (!(p > 0.0 && p <= 1.0)) throw domain_error("fano budget: p must lie in (0,1]");
    if (!(theta >= 0.0)) throw domain_error("fano budget: theta must be >= 0");
    if (!(sigma > 0.0)) throw domain_error("fano budget: sigma must be positive");
    if (!(a > 8.0)) throw domain_error("fano budget: a must exceed 8");

    FanoBudgetReport report;
    report.p = p;
    report.theta = theta;
    report.sigma = sigma;
    report.a = a;
    for (long long n : n_list) {
        if (n < 1) throw domain_error("fano budget: sample sizes must be positive");
        FanoBudgetRow row;
        row.n = n;
        const double exponent = p / (1.0 + p + 2.0 * theta);
        row.modes = static_cast<long long>(
            std::ceil(a * std::pow(static_cast<double>(n), exponent)));
        const double log_target = static_cast<double>(row.modes) / 8.0;
        row.log_packing =
            log_target > 700.0 ? log_target : std::log(std::ceil(std::exp(log_target)));
        const double mu_j = std::pow(static_cast<double>(row.modes), -1.0 / p);
        row.kl_bound = 2.0 / (sigma * sigma) * std::pow(mu_j, 1.0 + 2.0 * theta);
        row.ratio = static_cast<double>(n) * row.kl_bound / row.log_packing;
        report.rows.push_back(row);
    }
    return report;
}

void write_packing_json(const PackingSet& ps, std::ostream& os) {
    nlohmann::json j;
    j["J"] = ps.modes;
    j["theta"] = ps.theta;
    j["codewords"] = ps.codewords;
    j["mu"] = std::vector<double>(ps.mu.begin(), ps.mu.end());
    auto& coeffs = j["slope_coeffs"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < ps.slope_coeffs.cols(); ++i) {
        std::vector<double> column(static_cast<std::size_t>(ps.slope_coeffs.rows()));
        for (Eigen::Index k = 0; k < ps.slope_coeffs.rows(); ++k)
            column[static_cast<std::size_t>(k)] = ps.slope_coeffs(k, i);
        coeffs.push_back(column);
    }
    j["separation_lower"] = ps.separation_lower;
    os << j.dump(2) << '\n';
}

void save_packing_json(const PackingSet& ps, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open " + path + " for writing");
    write_packing_json(ps, os);
}

}  // namespace flr
