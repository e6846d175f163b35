#include "flr/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "flr/errors.hpp"
#include "flr/numio.hpp"
#include "flr/rng.hpp"

namespace flr {

Grid::Grid(std::vector<double> nodes, std::vector<double> weights)
    : nodes_(std::move(nodes)), weights_(std::move(weights)) {
    if (nodes_.size() < 2) throw shape_error("Grid: need at least two nodes");
    if (weights_.size() + 1 != nodes_.size())
        throw shape_error("Grid: weights length must be node count minus one");
    if (nodes_.front() != 0.0 || nodes_.back() != 1.0)
        throw domain_error("Grid: endpoints must be exactly 0 and 1");
    for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
        if (!(nodes_[k] < nodes_[k + 1]))
            throw domain_error("Grid: nodes must be strictly ascending");
    }
    double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12)
        throw numeric_error("Grid: weights sum to " + fmt_double(total) + ", expected 1");
}

double Grid::mesh_constant() const {
    return static_cast<double>(m()) * *std::max_element(weights_.begin(), weights_.end());
}

vec_t Grid::weight_vector() const {
    return Eigen::Map<const vec_t>(weights_.data(), static_cast<Eigen::Index>(weights_.size()));
}

namespace {

std::vector<double> weights_from_nodes(const std::vector<double>& nodes) {
    std::vector<double> w(nodes.size() - 1);
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) w[k] = nodes[k + 1] - nodes[k];
    return w;
}

// Inverse CDF of a piecewise-constant density on equal-width cells.
double density_quantile(const std::vector<double>& density, double u) {
    const std::size_t cells = density.size();
    const double cell_w = 1.0 / static_cast<double>(cells);
    double acc = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
        double mass = density[c] * cell_w;
        if (u <= acc + mass || c + 1 == cells) {
            double frac = (u - acc) / mass;
            frac = std::clamp(frac, 0.0, 1.0);
            return (static_cast<double>(c) + frac) * cell_w;
        }
        acc += mass;
    }
    return 1.0;
}

}  // namespace

Grid make_grid(const SamplingScheme& scheme, int m) {
    if (m < 1) throw domain_error("make_grid: m must be >= 1");

    if (scheme.kind == SamplingScheme::Kind::equispaced) {
        std::vector<double> nodes(static_cast<std::size_t>(m) + 1);
        for (int k = 0; k <= m; ++k)
            nodes[static_cast<std::size_t>(k)] = static_cast<double>(k) / static_cast<double>(m);
        nodes.front() = 0.0;
        nodes.back() = 1.0;
        return Grid(nodes, weights_from_nodes(nodes));
    }

    // iid_density
    if (scheme.density.empty()) throw domain_error("make_grid: empty density descriptor");
    double mass = 0.0;
    for (double d : scheme.density) {
        if (!(d > 0.0)) throw domain_error("make_grid: density cells must be positive");
        mass += d;
    }
    mass /= static_cast<double>(scheme.density.size());
    if (std::abs(mass - 1.0) > 1e-9)
        throw domain_error("make_grid: density must integrate to 1 (got " + fmt_double(mass) + ")");

    RandomStream rs(derive_seed(scheme.seed, "grid.iid"));
    std::vector<double> interior(static_cast<std::size_t>(m) - 1);
    for (auto& t : interior) t = density_quantile(scheme.density, rs.uniform());
    std::sort(interior.begin(), interior.end());

    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(m) + 1);
    nodes.push_back(0.0);
    for (double t : interior) {
        // strict ordering: bump duplicates (and endpoint collisions) by one ulp
        double lo = nodes.back();
        if (t <= lo) t = std::nextafter(lo, 2.0);
        if (t >= 1.0) t = std::nextafter(1.0, 0.0);
        while (t <= nodes.back()) t = std::nextafter(t, 2.0);
        nodes.push_back(t);
    }
    nodes.push_back(1.0);
    if (nodes[nodes.size() - 2] >= 1.0)
        throw numeric_error("make_grid: interior points collide with endpoint 1");
    return Grid(nodes, weights_from_nodes(nodes));
}

double riemann_sum(const Grid& grid, const vec_t& samples) {
    if (samples.size() != grid.m())
        throw shape_error("riemann_sum: expected " + std::to_string(grid.m()) +
                          " samples, got " + std::to_string(samples.size()));
    double acc = 0.0;
    for (int k = 0; k < grid.m(); ++k) acc += grid.weight(k) * samples[k];
    return acc;
}

QuadratureRateResult quadrature_rate_test(const std::function<double(double)>& f,
                                          double exact, const std::vector<int>& m_list) {
    if (m_list.size() < 4) throw config_error("quadrature_rate_test: need >= 4 grid sizes");
    QuadratureRateResult out;
    out.errors.reserve(m_list.size());
    for (int m : m_list) {
        Grid g = make_grid({}, m);
        vec_t s(m);
        for (int k = 0; k < m; ++k) s[k] = f(g.node(k));
        out.errors.push_back(std::abs(riemann_sum(g, s) - exact));
    }
    bool all_tiny = std::all_of(out.errors.begin(), out.errors.end(),
                                [](double e) { return e < 1e-14; });
    if (all_tiny) {
        out.saturated = true;
        return out;
    }
    // least squares on (log m, log err); clamp zero errors to the saturation floor
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(m_list.size());
    for (std::size_t i = 0; i < m_list.size(); ++i) {
        double x = std::log(static_cast<double>(m_list[i]));
        double y = std::log(std::max(out.errors[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return out;
}

void write_grid_csv(const Grid& grid, std::ostream& os) {
    os << "node,weight\n";
    for (std::size_t k = 0; k < grid.nodes().size(); ++k) {
        os << fmt_double(grid.nodes()[k]) << ',';
        if (k < grid.weights().size()) os << fmt_double(grid.weights()[k]);
        os << '\n';
    }
}

Grid read_grid_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw parse_error("grid csv: empty stream");
    if (line == "node,weight\r") line.pop_back();
    if (line != "node,weight") throw parse_error("grid csv: bad header '" + line + "'");
    std::vector<double> nodes, weights;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw parse_error("grid csv: row missing comma");
        nodes.push_back(parse_double(std::string_view(line).substr(0, comma)));
        auto wtok = std::string_view(line).substr(comma + 1);
        if (!wtok.empty()) weights.push_back(parse_double(wtok));
    }
    return Grid(std::move(nodes), std::move(weights));
}

void save_grid_csv(const Grid& grid, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open " + path + " for writing");
    write_grid_csv(grid, os);
    if (!os.good()) throw io_error("write failure on " + path);
}

Grid load_grid_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open " + path);
    return read_grid_csv(is);
}

}  // namespace flr
