#include "flr/filters.hpp"

#include <cmath>

#include "flr/errors.hpp"
#include "flr/numio.hpp"

namespace flr {

FilterSpec FilterSpec::tikhonov() { return {Kind::tikhonov, 1}; }

FilterSpec FilterSpec::iterated_tikhonov(int s) {
    if (s < 1) throw domain_error("iterated_tikhonov: iteration count must be >= 1");
    return {Kind::iterated_tikhonov, s};
}

FilterSpec FilterSpec::gradient_flow() { return {Kind::gradient_flow, 1}; }

double FilterSpec::qualification() const {
    switch (kind) {
        case Kind::tikhonov: return 1.0;
        case Kind::iterated_tikhonov: return static_cast<double>(s);
        case Kind::gradient_flow: return std::numeric_limits<double>::infinity();
    }
    return 1.0;
}

double FilterSpec::bound_b() const {
    switch (kind) {
        case Kind::tikhonov: return 1.0;
        case Kind::iterated_tikhonov: return static_cast<double>(s);
        case Kind::gradient_flow: return gradient_flow_sharp_b;
    }
    return 1.0;
}

double FilterSpec::bound_d() const { return bound_b(); }

double FilterSpec::f_nu(double nu) const {
    if (nu < 0.0 || nu > qualification())
        throw domain_error("f_nu: nu outside [0, qualification]");
    if (kind == Kind::gradient_flow)
        return nu == 0.0 ? 1.0 : std::pow(nu / std::exp(1.0), nu);
    return 1.0;
}

double filter_eval(const FilterSpec& spec, double lambda, double t) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw domain_error("filter_eval: lambda must lie in (0,1), got " + fmt_double(lambda));
    if (!(t >= 0.0)) throw domain_error("filter_eval: t must be nonnegative");

    switch (spec.kind) {
        case FilterSpec::Kind::tikhonov:
            return 1.0 / (lambda + t);

        case FilterSpec::Kind::iterated_tikhonov: {
            // Partial-fraction form sum_{k=1}^{s} lambda^{k-1}/(lambda+t)^k:
            // algebraically equal to ((lambda+t)^s - lambda^s)/(t (lambda+t)^s)
            // but free of the cancellation that form suffers for t << lambda,
            // and exact (s/lambda) at t = 0.
            const double inv = 1.0 / (lambda + t);
            const double q = lambda * inv;
            double term = inv;
            double acc = term;
            for (int k = 1; k < spec.s; ++k) {
                term *= q;
                acc += term;
            }
            return acc;
        }

        case FilterSpec::Kind::gradient_flow: {
            if (t == 0.0) return 1.0 / lambda;
            const double x = t / lambda;
            if (x < 1e-8) {
                // series for (1 - e^{-x})/x to avoid cancellation
                return (1.0 - 0.5 * x + x * x / 6.0) / lambda;
            }
            return -std::expm1(-x) / t;
        }
    }
    throw domain_error("filter_eval: unknown filter kind");
}

mat_t filter_apply(const FilterSpec& spec, double lambda, const mat_t& a) {
    if (a.rows() != a.cols()) throw shape_error("filter_apply: matrix not square");
    double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (((a - a.transpose()).cwiseAbs().maxCoeff()) > 1e-10 * scale)
        throw shape_error("filter_apply: matrix not symmetric within tolerance");

    mat_t sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<mat_t> solver(sym);
    if (solver.info() != Eigen::Success)
        throw numeric_error("filter_apply: eigensolver failed");
    vec_t vals = solver.eigenvalues().cwiseMax(0.0);  // clip round-off negatives
    vec_t mapped(vals.size());
    for (int i = 0; i < vals.size(); ++i) mapped[i] = filter_eval(spec, lambda, vals[i]);
    return solver.eigenvectors() * mapped.asDiagonal() * solver.eigenvectors().transpose();
}

FilterSpec parse_filter(const std::string& text) {
    if (text == "tr") return FilterSpec::tikhonov();
    if (text == "gf") return FilterSpec::gradient_flow();
    if (text.rfind("itr:s=", 0) == 0) {
        long long s = parse_int(std::string_view(text).substr(6));
        if (s < 1) throw parse_error("filter 'itr': iteration count must be >= 1");
        return FilterSpec::iterated_tikhonov(static_cast<int>(s));
    }
    throw parse_error("unknown filter '" + text + "' (expected tr, itr:s=<n>, or gf)");
}

std::string filter_to_string(const FilterSpec& spec) {
    switch (spec.kind) {
        case FilterSpec::Kind::tikhonov: return "tr";
        case FilterSpec::Kind::iterated_tikhonov: return "itr:s=" + std::to_string(spec.s);
        case FilterSpec::Kind::gradient_flow: return "gf";
    }
    return "tr";
}

namespace {

// {0} followed by a log-spaced sweep of (lo, hi]; points count excludes the 0.
std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(points) + 1);
    t.push_back(0.0);
    const double l0 = std::log(lo);
    const double l1 = std::log(hi);
    for (int i = 0; i < points; ++i) {
        double f = static_cast<double>(i) / static_cast<double>(points - 1);
        t.push_back(std::exp(l0 + f * (l1 - l0)));
    }
    t.back() = hi;
    return t;
}

}  // namespace

FilterFamily family_of(const FilterSpec& spec) {
    FilterFamily fam;
    fam.name = filter_to_string(spec);
    fam.eval = [spec](double lambda, double t) { return filter_eval(spec, lambda, t); };
    fam.qualification = spec.qualification();
    fam.b = spec.bound_b();
    fam.d = spec.bound_d();
    fam.f_nu = [spec](double nu) { return spec.f_nu(nu); };
    return fam;
}

FilterPropertyReport verify_filter_properties(const FilterFamily& family,
                                              const std::vector<double>& lambdas,
                                              double rho_alpha, double slack) {
    if (!(rho_alpha > 0.0)) throw domain_error("verify_filter_properties: rho must be positive");
    for (double l : lambdas)
        if (!(l > 0.0 && l < 1.0))
            throw domain_error("verify_filter_properties: lambda outside (0,1)");

    FilterPropertyReport rep;
    rep.name = family.name;
    rep.rho = rho_alpha;
    rep.cut = 1.5 * rho_alpha + 0.5;
    rep.t_max = 10.0 * rep.cut;
    rep.slack = slack;
    rep.lambdas = lambdas;
    rep.bound_b = family.b;
    rep.bound_d = family.d;

    constexpr int grid_points = 2001;
    const std::vector<double> inner = log_grid(rep.cut * 1e-8, rep.cut, grid_points);
    std::vector<double> outer = log_grid(rep.cut, rep.t_max, grid_points);
    outer.erase(outer.begin());  // (cut, t_max]: drop 0 and the closed left endpoint

    std::vector<double> nus;
    if (std::isinf(family.qualification)) {
        nus = {0.0, 1.0, 2.0, 4.0};
    } else {
        nus = {0.0, family.qualification / 2.0, family.qualification};
    }
    for (double nu : nus) rep.p2.push_back({nu, 0.0, false});

    for (double lambda : lambdas) {
        for (double t : inner) {
            double psi = family.eval(lambda, t);
            rep.p1_sup = std::max(rep.p1_sup, std::abs((lambda + t) * psi));
            double resid = std::abs(1.0 - t * psi);
            for (auto& chk : rep.p2) {
                double lhs = resid * std::pow(t, chk.nu);
                double rhs = family.f_nu(chk.nu) * std::pow(lambda, chk.nu);
                chk.worst_ratio = std::max(chk.worst_ratio, lhs / rhs);
            }
        }
        for (double t : outer) {
            double psi = family.eval(lambda, t);
            rep.p3_sup = std::max(rep.p3_sup, std::abs((lambda + t) * psi));
        }
    }

    rep.p1_pass = rep.p1_sup <= family.b * (1.0 + slack);
    rep.p3_pass = rep.p3_sup <= family.d * (1.0 + slack);
    rep.p2_pass = true;
    for (auto& chk : rep.p2) {
        chk.pass = chk.worst_ratio <= 1.0 + slack;
        rep.p2_pass = rep.p2_pass && chk.pass;
    }
    return rep;
}

}  // namespace flr
