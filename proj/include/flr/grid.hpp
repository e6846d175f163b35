#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flr/types.hpp"

namespace flr {

/// Partition of [0,1] into observation points r_1 < ... < r_{m+1} with
/// left-rule quadrature weights w_k = r_{k+1} - r_k, k = 1..m.  Endpoints are
/// pinned at 0 and 1; the last node carries no weight.
class Grid {
public:
    Grid(std::vector<double> nodes, std::vector<double> weights);

    int m() const { return static_cast<int>(weights_.size()); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    double node(int k) const { return nodes_[static_cast<std::size_t>(k)]; }
    double weight(int k) const { return weights_[static_cast<std::size_t>(k)]; }

    /// Mesh constant m * max_k w_k (== 1 on equispaced grids).
    double mesh_constant() const;

    /// Weights as a vector over the m weighted nodes.
    vec_t weight_vector() const;

    bool operator==(const Grid&) const = default;

private:
    std::vector<double> nodes_;    // length m+1
    std::vector<double> weights_;  // length m
};

struct SamplingScheme {
    enum class Kind { equispaced, iid_density };
    Kind kind = Kind::equispaced;
    /// Piecewise-constant density on equal-width cells of [0,1]; must be
    /// strictly positive and integrate to one (checked to 1e-9).  Ignored for
    /// the equispaced scheme.  A single cell {1.0} is the uniform density.
    std::vector<double> density{1.0};
    std::uint64_t seed = 0;
};

/// Build a grid with m weighted nodes.  For iid_density, m-1 interior points
/// are drawn i.i.d. from the density, sorted, deduplicated by the smallest
/// representable perturbation, and the endpoints 0 and 1 appended.
Grid make_grid(const SamplingScheme& scheme, int m);

/// Left-rule quadrature: sum_k w_k * samples_k, samples given at r_1..r_m.
double riemann_sum(const Grid& grid, const vec_t& samples);

/// Least-squares slope of log|quadrature error| vs log m on equispaced grids.
/// `f` is evaluated pointwise; `exact` is the reference value of its integral.
/// If every error is below 1e-14 the fit is degenerate and `saturated` is set
/// instead of a slope.
struct QuadratureRateResult {
    std::optional<double> slope;
    bool saturated = false;
    std::vector<double> errors;  // one per m in m_list
};

QuadratureRateResult quadrature_rate_test(const std::function<double(double)>& f,
                                          double exact, const std::vector<int>& m_list);

/// CSV round-trip: header `node,weight`, one row per node, weight blank on the
/// last row, shortest round-trip decimal formatting throughout.
void write_grid_csv(const Grid& grid, std::ostream& os);
Grid read_grid_csv(std::istream& is);
void save_grid_csv(const Grid& grid, const std::string& path);
Grid load_grid_csv(const std::string& path);

}  // namespace flr
