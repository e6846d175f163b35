#include "flr/operators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "flr/errors.hpp"
#include "flr/numio.hpp"

namespace flr {

DiscretizedOperator discretize(const mat_t& kernel_values, const Grid& grid,
                               DiscretizedOperator::Label label) {
    const int m = grid.m();
    if (kernel_values.rows() != m || kernel_values.cols() != m)
        throw shape_error("discretize: kernel matrix is " + std::to_string(kernel_values.rows()) +
                          "x" + std::to_string(kernel_values.cols()) + ", grid has m = " +
                          std::to_string(m));
    vec_t half = grid.weight_vector().cwiseSqrt();
    mat_t a = half.asDiagonal() * kernel_values * half.asDiagonal();
    a = 0.5 * (a + a.transpose()).eval();  // kill round-off asymmetry
    return DiscretizedOperator{grid, std::move(a), label};
}

SpectralDecomposition::SpectralDecomposition(Grid grid, vec_t eigenvalues, mat_t psi,
                                             double truncation_tol)
    : grid_(std::move(grid)),
      eigenvalues_(std::move(eigenvalues)),
      psi_(std::move(psi)),
      truncation_tol_(truncation_tol) {
    if (psi_.rows() != grid_.m() || psi_.cols() != eigenvalues_.size())
        throw shape_error("SpectralDecomposition: inconsistent dimensions");
}

vec_t SpectralDecomposition::coefficients(const vec_t& f) const {
    if (f.size() != grid_.m())
        throw shape_error("SpectralDecomposition::coefficients: grid function has wrong length");
    return psi_.transpose() * (grid_.weight_vector().asDiagonal() * f);
}

namespace {

// W^{-1/2} as a vector, with the weight-positivity check in one place.
vec_t inverse_root_weights(const Grid& grid) {
    vec_t w = grid.weight_vector();
    for (int k = 0; k < w.size(); ++k)
        if (!(w[k] > 0.0)) throw numeric_error("grid has a nonpositive quadrature weight");
    return w.cwiseSqrt().cwiseInverse();
}

}  // namespace

SpectralDecomposition eigendecompose(const DiscretizedOperator& op, double tol) {
    if (tol < 0.0) throw domain_error("eigendecompose: negative truncation tolerance");
    Eigen::SelfAdjointEigenSolver<mat_t> solver(op.sym);
    if (solver.info() != Eigen::Success)
        throw numeric_error("eigendecompose: eigensolver failed to converge on a " +
                            std::to_string(op.sym.rows()) + "x" + std::to_string(op.sym.cols()) +
                            " matrix with norm " + fmt_double(op.sym.norm()));

    const int m = op.grid.m();
    // Eigen returns ascending order; reverse, clip at zero, truncate.
    vec_t raw = solver.eigenvalues().reverse();
    mat_t q = solver.eigenvectors().rowwise().reverse();
    double top = std::max(raw[0], 0.0);
    int keep = 0;
    while (keep < m) {
        double v = std::max(raw[keep], 0.0);
        if (keep > 0 && v < tol * top) break;
        ++keep;
    }

    vec_t lambda(keep);
    for (int j = 0; j < keep; ++j) lambda[j] = std::max(raw[j], 0.0);

    // Weighted coordinates -> grid functions; canonical sign: largest-magnitude
    // component positive, so decompositions are reproducible artifacts.
    vec_t inv_half = inverse_root_weights(op.grid);
    mat_t psi(m, keep);
    for (int j = 0; j < keep; ++j) {
        vec_t col = inv_half.cwiseProduct(q.col(j));
        int arg = 0;
        double best = 0.0;
        for (int k = 0; k < m; ++k) {
            if (std::abs(col[k]) > best) {
                best = std::abs(col[k]);
                arg = k;
            }
        }
        if (col[arg] < 0.0) col = -col;
        psi.col(j) = col;
    }
    return SpectralDecomposition(op.grid, std::move(lambda), std::move(psi), tol);
}

vec_t fractional_apply(const SpectralDecomposition& dec, double r, const vec_t& f,
                       double inv_cutoff) {
    if (r < -1.0) throw domain_error("fractional_apply: power below -1 not supported");
    if (r < 0.0 && !(inv_cutoff > 0.0))
        throw domain_error("fractional_apply: negative power needs a positive inv_cutoff");
    vec_t a = dec.coefficients(f);
    const double top = dec.rank() > 0 ? dec.eigenvalue(0) : 0.0;
    const double floor = inv_cutoff * top;
    vec_t scaled = vec_t::Zero(a.size());
    for (int j = 0; j < a.size(); ++j) {
        double l = dec.eigenvalue(j);
        if (r == 0.0) {
            scaled[j] = a[j];  // projection onto the retained span
        } else if (r > 0.0) {
            scaled[j] = (l > 0.0) ? std::pow(l, r) * a[j] : 0.0;
        } else {
            if (l >= floor && l > 0.0) scaled[j] = std::pow(l, r) * a[j];
        }
    }
    return dec.psi() * scaled;
}

int find_node_index(const Grid& grid, double t) {
    const auto& nodes = grid.nodes();
    auto it = std::lower_bound(nodes.begin(), nodes.end(), t - 1e-12);
    if (it != nodes.end() && std::abs(*it - t) <= 1e-12)
        return static_cast<int>(it - nodes.begin());
    throw domain_error("point " + fmt_double(t) + " is not a grid node (no interpolation)");
}

double sqrt_kernel_eval(const SpectralDecomposition& dec, double s, double t) {
    int ks = find_node_index(dec.grid(), s);
    int kt = find_node_index(dec.grid(), t);
    if (ks >= dec.grid().m() || kt >= dec.grid().m())
        throw domain_error("sqrt_kernel_eval: last node carries no eigenfunction values");
    double acc = 0.0;
    for (int j = 0; j < dec.rank(); ++j)
        acc += std::sqrt(dec.eigenvalue(j)) * dec.psi()(ks, j) * dec.psi()(kt, j);
    return acc;
}

mat_t sqrt_kernel_matrix(const SpectralDecomposition& dec) {
    vec_t root = dec.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    mat_t s = dec.psi() * root.asDiagonal() * dec.psi().transpose();
    return 0.5 * (s + s.transpose()).eval();
}

DiscretizedOperator compose_t_alpha(const SpectralDecomposition& lk,
                                    const DiscretizedOperator& lc) {
    if (!(lk.grid() == lc.grid))
        throw shape_error("compose_t_alpha: decomposition and operator use different grids");
    vec_t half = lk.grid().weight_vector().cwiseSqrt();
    // A_K^{1/2} in weighted coordinates: Q sqrt(Lambda) Q^T with Q = W^{1/2} Psi.
    mat_t q = half.asDiagonal() * lk.psi();
    mat_t a_half = q * lk.eigenvalues().cwiseSqrt().asDiagonal() * q.transpose();
    mat_t t = a_half * lc.sym * a_half;
    t = 0.5 * (t + t.transpose()).eval();
    return DiscretizedOperator{lk.grid(), std::move(t), DiscretizedOperator::Label::composed};
}

double effective_dimension(const std::vector<double>& mu, double lambda) {
    if (!(lambda > 0.0)) throw domain_error("effective_dimension: lambda must be positive");
    double acc = 0.0;
    for (double m : mu) {
        if (m < 0.0) throw domain_error("effective_dimension: negative eigenvalue in spectrum");
        acc += m / (lambda + m);
    }
    return acc;
}

EffectiveDimensionCurve effective_dimension_curve(const std::vector<double>& mu,
                                                  const std::vector<double>& lambdas) {
    EffectiveDimensionCurve curve;
    curve.lambdas = lambdas;
    curve.values.reserve(lambdas.size());
    for (double l : lambdas) curve.values.push_back(effective_dimension(mu, l));
    return curve;
}

double sobolev_norm(const SpectralDecomposition& lk, const vec_t& beta, double inv_cutoff) {
    if (!(inv_cutoff > 0.0)) throw domain_error("sobolev_norm: inv_cutoff must be positive");
    vec_t a = lk.coefficients(beta);
    double total = 0.0;
    for (int k = 0; k < beta.size(); ++k) total += lk.grid().weight(k) * beta[k] * beta[k];
    double inside = a.squaredNorm();
    double outside = std::max(total - inside, 0.0);
    if (total > 0.0 && outside > 0.1 * total)
        throw numeric_error("sobolev_norm: " + fmt_double(100.0 * outside / total) +
                            "% of L2 mass lies outside the retained span");
    const double top = lk.rank() > 0 ? lk.eigenvalue(0) : 0.0;
    const double floor = inv_cutoff * top;
    double acc = 0.0;
    for (int j = 0; j < a.size(); ++j) {
        double l = lk.eigenvalue(j);
        if (l >= floor && l > 0.0) acc += a[j] * a[j] / l;
    }
    return std::sqrt(acc);
}

void save_spectral(const SpectralDecomposition& dec, const std::string& grid_ref,
                   const std::string& json_path, const std::string& csv_path) {
    nlohmann::json j;
    j["grid_ref"] = grid_ref;
    j["truncation_tol"] = dec.truncation_tol();
    auto& ev = j["eigenvalues"] = nlohmann::json::array();
    for (int i = 0; i < dec.rank(); ++i) ev.push_back(dec.eigenvalue(i));
    std::ofstream js(json_path);
    if (!js) throw io_error("cannot open " + json_path);
    js << j.dump(2) << '\n';

    std::ofstream cs(csv_path);
    if (!cs) throw io_error("cannot open " + csv_path);
    for (int k = 0; k < dec.psi().rows(); ++k) {
        for (int c = 0; c < dec.psi().cols(); ++c) {
            if (c) cs << ',';
            cs << fmt_double(dec.psi()(k, c));
        }
        cs << '\n';
    }
    if (!cs.good()) throw io_error("write failure on " + csv_path);
}

}  // namespace flr
