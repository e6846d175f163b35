#include "flr/estimator.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "flr/errors.hpp"
#include "flr/numio.hpp"

namespace flr {

Dataset::Dataset(Grid grid_in, mat_t X_in, vec_t y_in)
    : grid(std::move(grid_in)), X(std::move(X_in)), y(std::move(y_in)) {
    const auto cols = static_cast<Eigen::Index>(grid.nodes().size());
    if (X.rows() < 1) throw shape_error("dataset: need at least one observation");
    if (X.cols() != cols)
        throw shape_error("dataset: covariate columns " + std::to_string(X.cols()) +
                          " != grid node count " + std::to_string(cols));
    if (y.size() != X.rows())
        throw shape_error("dataset: response length " + std::to_string(y.size()) +
                          " != observation count " + std::to_string(X.rows()));
    if (!X.allFinite() || !y.allFinite())
        throw numeric_error("dataset: non-finite entry in covariates or responses");
}

GramFactor::GramFactor(const Grid& grid, const SobolevKernel& kernel)
    : grid_(grid), alpha_(kernel.alpha()), g_(kernel_matrix(kernel, grid)) {
    Eigen::SelfAdjointEigenSolver<mat_t> solver(g_);
    if (solver.info() != Eigen::Success)
        throw numeric_error("gram factor: eigendecomposition failed on m = " +
                            std::to_string(grid.m()));
    vec_t s = solver.eigenvalues().reverse();
    mat_t q = solver.eigenvectors().rowwise().reverse();
    const double top = std::max(s[0], 0.0);
    const double neg_tol = 1e-10 * std::max(top, 1.0);
    if (s[s.size() - 1] < -neg_tol)
        throw numeric_error("gram factor: kernel gram has negative eigenvalue " +
                            std::string(fmt_double(s[s.size() - 1]).data()));
    eigs_ = s.cwiseMax(0.0);
    vecs_ = std::move(q);
    g_half_ = vecs_ * eigs_.cwiseSqrt().asDiagonal() * vecs_.transpose();
    g_half_ = 0.5 * (g_half_ + g_half_.transpose()).eval();
}

double GramFactor::condition() const {
    const double lo = eigs_[eigs_.size() - 1];
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return eigs_[0] / lo;
}

vec_t GramFactor::inv_half_apply(const vec_t& v) const {
    if (v.size() != eigs_.size())
        throw shape_error("gram factor: vector length " + std::to_string(v.size()) +
                          " != m = " + std::to_string(eigs_.size()));
    const double floor = relative_floor * eigs_[0];
    if (!(eigs_[eigs_.size() - 1] >= floor))
        throw ill_conditioned_error("gram factor: inverse square root below relative floor",
                                    condition());
    return vecs_ * (vecs_.transpose() * v).cwiseQuotient(eigs_.cwiseSqrt());
}

EmpiricalSystem assemble(const Dataset& dataset, const GramFactor& gram) {
    if (!(dataset.grid == gram.grid()))
        throw shape_error("assemble: dataset grid differs from gram factor grid");
    const int m = dataset.grid.m();
    const double n = static_cast<double>(dataset.n());
    const vec_t w = dataset.grid.weight_vector();

    // Z = X D over the m weighted columns; A_sym = (1/n) (Z G^{1/2})^T (Z G^{1/2}).
    const mat_t z = dataset.X.leftCols(m) * w.asDiagonal();
    const mat_t p = z * gram.g_half();

    EmpiricalSystem sys;
    sys.a_sym = (p.transpose() * p) / n;
    sys.a_sym = 0.5 * (sys.a_sym + sys.a_sym.transpose()).eval();
    sys.b = (z.transpose() * dataset.y) / n;
    return sys;
}

EmpiricalSystem assemble(const Dataset& dataset, const SobolevKernel& kernel) {
    return assemble(dataset, GramFactor(dataset.grid, kernel));
}

SlopeEstimate fit_local(const Dataset& dataset, const GramFactor& gram,
                        const FilterSpec& filter, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw domain_error("fit_local: lambda must lie in (0,1), got " +
                           std::string(fmt_double(lambda).data()));
    const EmpiricalSystem sys = assemble(dataset, gram);
    const vec_t u = gram.g_half() * sys.b;
    const mat_t psi_a = filter_apply(filter, lambda, sys.a_sym);
    return SlopeEstimate{dataset.grid, gram.inv_half_apply(psi_a * u), gram.alpha(), lambda,
                         filter};
}

SlopeEstimate fit_local(const Dataset& dataset, const SobolevKernel& kernel,
                        const FilterSpec& filter, double lambda) {
    return fit_local(dataset, GramFactor(dataset.grid, kernel), filter, lambda);
}

vec_t beta_node_values(const SlopeEstimate& est) {
    const SobolevKernel kernel(est.alpha);
    return kernel_matrix(kernel, est.grid) * est.coeffs;
}

double predict(const SlopeEstimate& est, const vec_t& x_new) {
    const int m = est.grid.m();
    if (x_new.size() != m + 1)
        throw shape_error("predict: sample length " + std::to_string(x_new.size()) +
                          " != node count " + std::to_string(m + 1));
    const vec_t beta = beta_node_values(est);
    return riemann_sum(est.grid, beta.cwiseProduct(x_new.head(m)));
}

double estimation_error_w(const SlopeEstimate& est, const vec_t& f0_coeffs,
                          const SpectralDecomposition& lk) {
    if (f0_coeffs.size() > lk.rank())
        throw shape_error("estimation_error_w: truth uses " + std::to_string(f0_coeffs.size()) +
                          " modes but only " + std::to_string(lk.rank()) + " are retained");
    const int m_est = est.grid.m();

    // f_hat in the eigenbasis: coefficient_j = sqrt(lambda_j) sum_k c_k psi_j(r_k).
    vec_t gathered = vec_t::Zero(lk.rank());
    for (int k = 0; k < m_est; ++k) {
        const int idx = find_node_index(lk.grid(), est.grid.node(k));
        gathered += est.coeffs[k] * lk.psi().row(idx).transpose();
    }
    const vec_t fhat = lk.psi() * lk.eigenvalues().cwiseSqrt().cwiseProduct(gathered);
    vec_t diff = fhat;
    if (f0_coeffs.size() > 0) diff -= lk.psi().leftCols(f0_coeffs.size()) * f0_coeffs;
    return riemann_sum(lk.grid(), diff.cwiseAbs2());
}

double prediction_risk(const SlopeEstimate& est, const vec_t& beta0_nodes,
                       const DiscretizedOperator& lc) {
    const int m_fine = lc.grid.m();
    if (beta0_nodes.size() != m_fine)
        throw shape_error("prediction_risk: truth length " + std::to_string(beta0_nodes.size()) +
                          " != weighted node count " + std::to_string(m_fine));
    const int m_est = est.grid.m();
    const SobolevKernel kernel(est.alpha);
    mat_t cross(m_fine, m_est);
    for (int k = 0; k < m_fine; ++k)
        for (int l = 0; l < m_est; ++l)
            cross(k, l) = kernel.eval(lc.grid.node(k), est.grid.node(l));

    const vec_t diff = cross * est.coeffs - beta0_nodes;
    const vec_t u = lc.grid.weight_vector().cwiseSqrt().cwiseProduct(diff);
    return u.dot(lc.sym * u);
}

void write_slope_json(const SlopeEstimate& est, std::ostream& os) {
    nlohmann::json j;
    j["alpha"] = est.alpha;
    j["nodes"] = est.grid.nodes();
    j["coeffs"] = std::vector<double>(est.coeffs.begin(), est.coeffs.end());
    j["lambda"] = est.lambda;
    j["filter"] = filter_to_string(est.filter);
    os << j.dump(2) << '\n';
}

namespace {

Grid grid_from_nodes(const std::vector<double>& nodes) {
    if (nodes.size() < 2) throw parse_error("slope estimate: fewer than two grid nodes");
    std::vector<double> weights(nodes.size() - 1);
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) weights[k] = nodes[k + 1] - nodes[k];
    return Grid(nodes, weights);
}

}  // namespace

SlopeEstimate read_slope_json(std::istream& is) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("slope estimate: invalid JSON: ") + e.what());
    }
    for (const char* key : {"alpha", "nodes", "coeffs", "lambda", "filter"})
        if (!j.contains(key))
            throw parse_error(std::string("slope estimate: missing field '") + key + "'");

    try {
        const int alpha = j.at("alpha").get<int>();
        Grid grid = grid_from_nodes(j.at("nodes").get<std::vector<double>>());
        const auto raw = j.at("coeffs").get<std::vector<double>>();
        vec_t coeffs =
            Eigen::Map<const vec_t>(raw.data(), static_cast<Eigen::Index>(raw.size()));
        const double lambda = j.at("lambda").get<double>();
        const FilterSpec filter = parse_filter(j.at("filter").get<std::string>());
        if (alpha < 1) throw parse_error("slope estimate: alpha must be >= 1");
        if (coeffs.size() != grid.m())
            throw parse_error("slope estimate: coefficient count " + std::to_string(coeffs.size()) +
                              " != weighted node count " + std::to_string(grid.m()));
        return SlopeEstimate{std::move(grid), std::move(coeffs), alpha, lambda, filter};
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("slope estimate: malformed field: ") + e.what());
    }
}

void save_slope_json(const SlopeEstimate& est, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open " + path + " for writing");
    write_slope_json(est, os);
}

SlopeEstimate load_slope_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open " + path);
    return read_slope_json(is);
}

void write_dataset_csv(const Dataset& dataset, std::ostream& os) {
    const auto cols = static_cast<int>(dataset.grid.nodes().size());
    for (int k = 1; k <= cols; ++k) os << "r_" << k << ',';
    os << "y\n";
    for (Eigen::Index i = 0; i < dataset.X.rows(); ++i) {
        for (Eigen::Index k = 0; k < dataset.X.cols(); ++k)
            os << fmt_double(dataset.X(i, k)).data() << ',';
        os << fmt_double(dataset.y[i]).data() << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

}  // namespace

Dataset read_dataset_csv(std::istream& is, const Grid& grid) {
    const auto cols = static_cast<std::size_t>(grid.nodes().size());
    std::string line;
    if (!std::getline(is, line)) throw parse_error("dataset csv: empty stream");
    {
        const auto header = split_csv_line(line);
        if (header.size() != cols + 1 || header.back() != "y")
            throw parse_error("dataset csv: malformed header '" + line + "'");
        for (std::size_t k = 0; k < cols; ++k)
            if (header[k] != "r_" + std::to_string(k + 1))
                throw parse_error("dataset csv: unexpected column '" + header[k] + "'");
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != cols + 1)
            throw parse_error("dataset csv: row " + std::to_string(rows.size() + 1) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(cols + 1));
        std::vector<double> values(fields.size());
        for (std::size_t k = 0; k < fields.size(); ++k) values[k] = parse_double(fields[k]);
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw parse_error("dataset csv: no observation rows");

    mat_t X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    vec_t y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < cols; ++k)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        y[static_cast<Eigen::Index>(i)] = rows[i][cols];
    }
    return Dataset(grid, std::move(X), std::move(y));
}

void save_dataset_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open " + path + " for writing");
    write_dataset_csv(dataset, os);
}

Dataset load_dataset_csv(const std::string& path, const Grid& grid) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open " + path);
    return read_dataset_csv(is, grid);
}

}  // namespace flr
