#include "flr/synth.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <string>
#include <utility>

#include "flr/errors.hpp"
#include "flr/numio.hpp"
#include "flr/rng.hpp"
#include "flr/sobolev_kernel.hpp"

namespace flr {

GroundTruth build_ground_truth(std::shared_ptr<const SpectralDecomposition> lk, int alpha,
                               double p, double theta, int modes, std::uint64_t seed) {
    if (!lk) throw domain_error("ground truth: decomposition reference is empty");
    if (!(p > 0.0 && p <= 1.0)) throw domain_error("ground truth: p must lie in (0,1]");
    if (!(theta >= 0.0)) throw domain_error("ground truth: theta must be >= 0");
    if (modes < 1) throw domain_error("ground truth: need at least one mode");
    if (modes > lk->rank())
        throw capacity_error("ground truth: " + std::to_string(modes) +
                             " modes requested but only " + std::to_string(lk->rank()) +
                             " retained");
    const double floor = 1e-11 * lk->eigenvalue(0);
    if (!(lk->eigenvalue(modes - 1) >= floor))
        throw numeric_error("ground truth: kernel eigenvalue " + std::to_string(modes) +
                            " sits below the inversion floor");

    GroundTruth gt;
    gt.lk = lk;
    gt.alpha = alpha;
    gt.p = p;
    gt.theta = theta;
    gt.modes = modes;

    gt.mu.resize(modes);
    gt.nu.resize(modes);
    for (int j = 0; j < modes; ++j) {
        gt.mu[j] = std::pow(static_cast<double>(j + 1), -1.0 / p);
        gt.nu[j] = gt.mu[j] / lk->eigenvalue(j);
    }

    RandomStream rs(derive_seed(seed, "g0"));
    gt.g0.resize(modes);
    for (int j = 0; j < modes; ++j) gt.g0[j] = rs.normal();
    gt.g0 /= gt.g0.norm();

    gt.f0.resize(modes);
    for (int j = 0; j < modes; ++j) gt.f0[j] = std::pow(gt.mu[j], theta) * gt.g0[j];

    // Nystrom extension psi_j(1) = (1/lambda_j) sum_k w_k K(1, r_k) psi_j(r_k)
    // for the weightless node, which the eigensystem itself never touches.
    const Grid& grid = lk->grid();
    const SobolevKernel kernel(alpha);
    vec_t kw(grid.m());
    for (int k = 0; k < grid.m(); ++k) kw[k] = kernel.eval(1.0, grid.node(k)) * grid.weight(k);
    gt.psi_last = (lk->psi().leftCols(modes).transpose() * kw)
                      .cwiseQuotient(lk->eigenvalues().head(modes));

    gt.kappa_sq = 0.0;
    for (int j = 0; j < modes; ++j) gt.kappa_sq += gt.nu[j] / lk->eigenvalue(j);
    return gt;
}

int default_mode_count(const SpectralDecomposition& lk, int cap) {
    const double floor = 1e-11 * lk.eigenvalue(0);
    int count = std::min(cap, lk.rank() / 2);
    while (count > 1 && lk.eigenvalue(count - 1) < floor) --count;
    return std::max(1, count);
}

DiscretizedOperator build_covariance(const GroundTruth& gt) {
    const Grid& grid = gt.lk->grid();
    const vec_t root_w = grid.weight_vector().cwiseSqrt();
    // Q = W^{1/2} Psi_J has orthonormal columns, so Q diag(nu) Q^T is the
    // weighted-coordinate form of sum_j nu_j psi_j psi_j^T directly.
    const mat_t q = root_w.asDiagonal() * gt.lk->psi().leftCols(gt.modes);
    mat_t sym = q * gt.nu.asDiagonal() * q.transpose();
    sym = 0.5 * (sym + sym.transpose()).eval();
    return DiscretizedOperator{grid, std::move(sym), DiscretizedOperator::Label::covariance_kernel};
}

vec_t beta0_node_values(const GroundTruth& gt) {
    const vec_t scaled = gt.lk->eigenvalues().head(gt.modes).cwiseSqrt().cwiseProduct(gt.f0);
    return gt.lk->psi().leftCols(gt.modes) * scaled;
}

namespace {

/// n x J standard normal block in fixed row-major draw order.
mat_t draw_xi(int n, int modes, std::uint64_t seed) {
    RandomStream rs(derive_seed(seed, "xi"));
    mat_t xi(n, modes);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < modes; ++j) xi(i, j) = rs.normal();
    return xi;
}

}  // namespace

mat_t sample_x(const GroundTruth& gt, int n, std::uint64_t seed) {
    if (n < 1) throw domain_error("sample_x: need n >= 1");
    const Grid& grid = gt.lk->grid();
    const int m = grid.m();
    mat_t modes_at_nodes(m + 1, gt.modes);
    modes_at_nodes.topRows(m) = gt.lk->psi().leftCols(gt.modes);
    modes_at_nodes.row(m) = gt.psi_last.transpose();
    const mat_t xi = draw_xi(n, gt.modes, seed);
    return xi * gt.nu.cwiseSqrt().asDiagonal() * modes_at_nodes.transpose();
}

Dataset gen_dataset(const GroundTruth& gt, const Grid& grid, int n, const NoiseSpec& noise,
                    std::uint64_t seed) {
    if (n < 1) throw domain_error("gen_dataset: need n >= 1");
    if (!(noise.sigma >= 0.0)) throw domain_error("gen_dataset: noise sigma must be >= 0");
    const Grid& fine = gt.lk->grid();
    const int m_sub = grid.m();

    // Mode values at the requested nodes; every node must exist on the
    // decomposition grid, with the weightless node at 1 served by the
    // Nystrom extension.
    mat_t modes_at_nodes(m_sub + 1, gt.modes);
    for (int k = 0; k <= m_sub; ++k) {
        const double r = grid.node(k);
        if (r == 1.0) {
            modes_at_nodes.row(k) = gt.psi_last.transpose();
        } else {
            const int idx = find_node_index(fine, r);
            modes_at_nodes.row(k) = gt.lk->psi().row(idx).head(gt.modes);
        }
    }

    const mat_t xi = draw_xi(n, gt.modes, seed);
    const vec_t root_nu = gt.nu.cwiseSqrt();
    mat_t X = xi * root_nu.asDiagonal() * modes_at_nodes.transpose();

    const vec_t signal =
        root_nu.cwiseProduct(gt.lk->eigenvalues().head(gt.modes).cwiseSqrt()).cwiseProduct(gt.f0);
    vec_t y = xi * signal;
    if (noise.sigma > 0.0) {
        RandomStream eps(derive_seed(seed, "eps"));
        for (int i = 0; i < n; ++i) y[i] += noise.sigma * eps.normal();
    }
    return Dataset(grid, std::move(X), std::move(y));
}

KurtosisReport kurtosis_probe(const GroundTruth& gt, int n_mc, std::uint64_t seed,
                              int directions) {
    if (n_mc < 10000) throw domain_error("kurtosis_probe: need at least 10^4 samples");
    if (directions < 1) throw domain_error("kurtosis_probe: need at least one direction");

    const mat_t xi = draw_xi(n_mc, gt.modes, seed);
    RandomStream dir(derive_seed(seed, "dir"));

    KurtosisReport report;
    report.n_mc = n_mc;
    for (int d = 0; d < directions; ++d) {
        vec_t u(gt.modes);
        for (int j = 0; j < gt.modes; ++j) u[j] = dir.normal();
        u /= u.norm();
        // <X_i, f> = sum_j sqrt(nu_j) xi_ij u_j exactly in the truncated model.
        const vec_t z = xi * gt.nu.cwiseSqrt().cwiseProduct(u);
        const double m2 = z.squaredNorm() / static_cast<double>(n_mc);
        const double m4 = z.array().square().square().sum() / static_cast<double>(n_mc);
        report.ratios.push_back(m4 / (m2 * m2));
    }
    return report;
}

void write_ground_truth_json(const GroundTruth& gt, std::ostream& os) {
    nlohmann::json j;
    j["p"] = gt.p;
    j["theta"] = gt.theta;
    j["J"] = gt.modes;
    j["sigma"] = gt.sigma;
    j["mu"] = std::vector<double>(gt.mu.begin(), gt.mu.end());
    j["nu"] = std::vector<double>(gt.nu.begin(), gt.nu.end());
    j["g0"] = std::vector<double>(gt.g0.begin(), gt.g0.end());
    j["kappa_sq"] = gt.kappa_sq;
    os << j.dump(2) << '\n';
}

void save_ground_truth_json(const GroundTruth& gt, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open " + path + " for writing");
    write_ground_truth_json(gt, os);
}

}  // namespace flr
