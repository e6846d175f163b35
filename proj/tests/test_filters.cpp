#include <doctest.h>

#include <cmath>
#include <limits>

#include "flr/errors.hpp"
#include "flr/filters.hpp"

using namespace flr;

TEST_SUITE("filters") {

TEST_CASE("scalar evaluations match closed forms") {
    const double lambda = 0.1, t = 0.4;
    CHECK(filter_eval(FilterSpec::tikhonov(), lambda, t) == doctest::Approx(2.0).epsilon(1e-15));
    // ((l+t)^s - l^s)/(t (l+t)^s): 12/5 at s = 2, 312/125 at s = 4.
    CHECK(filter_eval(FilterSpec::iterated_tikhonov(2), lambda, t) ==
          doctest::Approx(2.4).epsilon(1e-15));
    CHECK(filter_eval(FilterSpec::iterated_tikhonov(4), lambda, t) ==
          doctest::Approx(2.496).epsilon(1e-15));
    CHECK(filter_eval(FilterSpec::gradient_flow(), lambda, t) ==
          doctest::Approx(-std::expm1(-4.0) / 0.4).epsilon(1e-15));
    // One iteration is plain Tikhonov.
    for (double tt : {0.0, 0.05, 1.0, 7.5})
        CHECK(filter_eval(FilterSpec::iterated_tikhonov(1), 0.3, tt) ==
              doctest::Approx(filter_eval(FilterSpec::tikhonov(), 0.3, tt)).epsilon(1e-15));
}

TEST_CASE("the t = 0 limits are exact") {
    CHECK(filter_eval(FilterSpec::tikhonov(), 0.1, 0.0) == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(filter_eval(FilterSpec::iterated_tikhonov(3), 0.1, 0.0) ==
          doctest::Approx(30.0).epsilon(1e-15));
    CHECK(filter_eval(FilterSpec::gradient_flow(), 0.1, 0.0) ==
          doctest::Approx(10.0).epsilon(1e-15));
    // Tiny t stays on the series branch, continuous with the limit.
    const double tiny = filter_eval(FilterSpec::gradient_flow(), 0.1, 1e-10);
    CHECK(tiny == doctest::Approx(10.0).epsilon(1e-8));
    CHECK(tiny <= 10.0);
}

TEST_CASE("evaluation guards its domain") {
    const FilterSpec tr = FilterSpec::tikhonov();
    CHECK_THROWS_AS(filter_eval(tr, 0.0, 0.5), domain_error);
    CHECK_THROWS_AS(filter_eval(tr, 1.0, 0.5), domain_error);
    CHECK_THROWS_AS(filter_eval(tr, -0.1, 0.5), domain_error);
    CHECK_THROWS_AS(filter_eval(tr, 0.1, -1e-12), domain_error);
    CHECK_THROWS_AS(FilterSpec::iterated_tikhonov(0), domain_error);
}

TEST_CASE("qualification and verification constants") {
    CHECK(FilterSpec::tikhonov().qualification() == 1.0);
    CHECK(FilterSpec::iterated_tikhonov(4).qualification() == 4.0);
    CHECK(std::isinf(FilterSpec::gradient_flow().qualification()));

    CHECK(FilterSpec::tikhonov().bound_b() == 1.0);
    CHECK(FilterSpec::iterated_tikhonov(4).bound_b() == 4.0);
    CHECK(FilterSpec::gradient_flow().bound_b() ==
          doctest::Approx(1.2984256075256537).epsilon(1e-15));
    // The stored constant is the true sup of (1+x)(1-e^{-x})/x: no sampled
    // value exceeds it, and the maximizing region comes within round-off.
    double sup = 0.0;
    for (int i = 1; i <= 4000; ++i) {
        const double x = 8.0 * i / 4000.0;
        sup = std::max(sup, (1.0 + x) * (-std::expm1(-x)) / x);
    }
    CHECK(sup <= FilterSpec::gradient_flow().bound_b());
    CHECK(sup == doctest::Approx(FilterSpec::gradient_flow().bound_b()).epsilon(1e-7));

    CHECK(FilterSpec::tikhonov().f_nu(1.0) == 1.0);
    CHECK(FilterSpec::iterated_tikhonov(2).f_nu(2.0) == 1.0);
    CHECK(FilterSpec::gradient_flow().f_nu(0.0) == 1.0);
    CHECK(FilterSpec::gradient_flow().f_nu(1.0) ==
          doctest::Approx(1.0 / std::exp(1.0)).epsilon(1e-15));
    CHECK(FilterSpec::gradient_flow().f_nu(2.0) ==
          doctest::Approx(4.0 / std::exp(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(FilterSpec::tikhonov().f_nu(1.5), domain_error);
    CHECK_THROWS_AS(FilterSpec::tikhonov().f_nu(-0.1), domain_error);
}

TEST_CASE("text forms round-trip") {
    for (const char* text : {"tr", "itr:s=2", "itr:s=7", "gf"}) {
        const FilterSpec spec = parse_filter(text);
        CHECK(filter_to_string(spec) == text);
        CHECK(parse_filter(filter_to_string(spec)) == spec);
    }
    CHECK_THROWS_AS(parse_filter("ridge"), parse_error);
    CHECK_THROWS_AS(parse_filter("itr:s=0"), parse_error);
    CHECK_THROWS_AS(parse_filter("itr:s=two"), parse_error);
    CHECK_THROWS_AS(parse_filter(""), parse_error);
}

TEST_CASE("all shipped families pass their own property audit") {
    const std::vector<double> lambdas = {1e-3, 0.01, 0.1, 0.5};
    const double rho = 1.3;
    for (const FilterSpec& spec :
         {FilterSpec::tikhonov(), FilterSpec::iterated_tikhonov(2),
          FilterSpec::iterated_tikhonov(4), FilterSpec::gradient_flow()}) {
        const FilterPropertyReport rep = verify_filter_properties(spec, lambdas, rho);
        CHECK(rep.all_pass());
        CHECK(rep.cut == doctest::Approx(1.5 * rho + 0.5).epsilon(1e-15));
        CHECK(rep.t_max == doctest::Approx(10.0 * rep.cut).epsilon(1e-15));
    }
    // (lambda+t) Psi is identically 1 for plain Tikhonov.
    const FilterPropertyReport tik =
        verify_filter_properties(FilterSpec::tikhonov(), lambdas, rho);
    CHECK(tik.p1_sup == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(tik.p3_sup == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("a family claiming too-small constants is caught") {
    FilterFamily doubled;
    doubled.name = "doubled";
    doubled.eval = [](double lambda, double t) { return 2.0 / (lambda + t); };
    doubled.qualification = 1.0;
    doubled.b = 1.0;
    doubled.d = 1.0;
    doubled.f_nu = [](double) { return 1.0; };

    const FilterPropertyReport rep =
        verify_filter_properties(doubled, {1e-3, 0.1, 0.5}, 1.0);
    CHECK(!rep.p1_pass);  // measured sup is 2, claimed 1
    CHECK(!rep.all_pass());
}

TEST_CASE("the property audit validates its inputs") {
    CHECK_THROWS_AS(verify_filter_properties(FilterSpec::tikhonov(), {0.1}, 0.0),
                    domain_error);
    CHECK_THROWS_AS(verify_filter_properties(FilterSpec::tikhonov(), {1.5}, 1.0),
                    domain_error);
}

TEST_CASE("the matrix filter agrees with the scalar map in an eigenbasis") {
    // A = Q diag(2, 1/2) Q^T with an explicit rotation Q.
    const double c = std::cos(0.3), s = std::sin(0.3);
    mat_t q(2, 2);
    q << c, -s, s, c;
    vec_t d(2);
    d << 2.0, 0.5;
    const mat_t a = q * d.asDiagonal() * q.transpose();

    for (const FilterSpec& spec :
         {FilterSpec::tikhonov(), FilterSpec::iterated_tikhonov(3),
          FilterSpec::gradient_flow()}) {
        const mat_t applied = filter_apply(spec, 0.2, a);
        vec_t mapped(2);
        mapped << filter_eval(spec, 0.2, 2.0), filter_eval(spec, 0.2, 0.5);
        const mat_t expected = q * mapped.asDiagonal() * q.transpose();
        CHECK((applied - expected).cwiseAbs().maxCoeff() < 1e-13);
    }

    CHECK_THROWS_AS(filter_apply(FilterSpec::tikhonov(), 0.2, mat_t::Ones(2, 3)),
                    shape_error);
    mat_t skew(2, 2);
    skew << 0.0, 1.0, -1.0, 0.0;
    CHECK_THROWS_AS(filter_apply(FilterSpec::tikhonov(), 0.2, skew), shape_error);
}

}  // TEST_SUITE
