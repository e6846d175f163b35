#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "flr/types.hpp"

namespace flr {

/// Spectral regularization filter family Psi_lambda approximating t -> 1/t,
/// with its qualification and verification constants:
///   tikhonov            Psi(t) = 1/(lambda+t)
///   iterated_tikhonov   Psi(t) = ((lambda+t)^s - lambda^s)/(t (lambda+t)^s)
///   gradient_flow       Psi(t) = (1 - e^{-t/lambda})/t
///
/// Constants B and D bound |(lambda+t) Psi| on [0, cut] and (cut, inf); F_nu
/// bounds the residual |1 - t Psi| t^nu <= F_nu lambda^nu up to the
/// qualification nu_psi.  For gradient flow the literature sometimes quotes
/// B = D = 1, which is the bound for lambda*Psi and t*Psi separately; the
/// combined sup equals max_{x>0} (1+x)(1-e^{-x})/x = 1.2984256... (attained at
/// the root of e^x = x^2+x+1), and that sharp value is what we store.
struct FilterSpec {
    enum class Kind { tikhonov, iterated_tikhonov, gradient_flow };

    Kind kind = Kind::tikhonov;
    int s = 1;  // iteration count, iterated_tikhonov only

    static constexpr double gradient_flow_sharp_b = 1.2984256075256537;

    static FilterSpec tikhonov();
    static FilterSpec iterated_tikhonov(int s);
    static FilterSpec gradient_flow();

    double qualification() const;  // nu_psi; +inf for gradient flow
    double bound_b() const;
    double bound_d() const;
    double bound_e() const { return std::max(bound_b(), bound_d()); }
    /// Residual constant F_nu for 0 <= nu <= qualification.
    double f_nu(double nu) const;

    bool operator==(const FilterSpec&) const = default;
};

/// Scalar filter value Psi_lambda(t); lambda must lie in (0,1), t >= 0.
double filter_eval(const FilterSpec& spec, double lambda, double t);

/// Matrix function: Q diag(Psi_lambda(clip(eig))) Q^T for symmetric PSD A.
mat_t filter_apply(const FilterSpec& spec, double lambda, const mat_t& a);

/// CLI string forms: "tr", "itr:s=4", "gf".
FilterSpec parse_filter(const std::string& text);
std::string filter_to_string(const FilterSpec& spec);

/// Numerical audit of the three defining filter properties on log-spaced
/// t-grids.  cut = 3*rho/2 + 1/2; property (3) sweeps (cut, 10*cut].
struct FilterPropertyReport {
    struct ResidualCheck {
        double nu;
        double worst_ratio;  // max over lambda of measured_sup / (F_nu lambda^nu)
        bool pass;
    };

    std::string name;
    double rho;
    double cut;
    double t_max;
    double slack;
    std::vector<double> lambdas;

    double p1_sup = 0.0;  // max over lambda, t in [0,cut] of |(lambda+t) Psi|
    double p3_sup = 0.0;  // max over lambda, t in (cut,t_max] of same
    double bound_b = 0.0;
    double bound_d = 0.0;
    bool p1_pass = false;
    bool p3_pass = false;
    std::vector<ResidualCheck> p2;
    bool p2_pass = false;

    bool all_pass() const { return p1_pass && p2_pass && p3_pass; }
};

/// Arbitrary family under audit: a scalar map (lambda, t) -> Psi_lambda(t)
/// with claimed constants.  Lets tests audit deliberately broken families.
struct FilterFamily {
    std::string name;
    std::function<double(double, double)> eval;
    double qualification;
    double b;
    double d;
    std::function<double(double)> f_nu;
};

FilterFamily family_of(const FilterSpec& spec);

FilterPropertyReport verify_filter_properties(const FilterFamily& family,
                                              const std::vector<double>& lambdas,
                                              double rho_alpha, double slack = 0.05);

inline FilterPropertyReport verify_filter_properties(const FilterSpec& spec,
                                                     const std::vector<double>& lambdas,
                                                     double rho_alpha, double slack = 0.05) {
    return verify_filter_properties(family_of(spec), lambdas, rho_alpha, slack);
}

}  // namespace flr
