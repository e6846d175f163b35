#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "flr/errors.hpp"
#include "flr/grid.hpp"
#include "flr/operators.hpp"
#include "flr/sobolev_kernel.hpp"

using namespace flr;

namespace {

SpectralDecomposition decompose_kernel(int alpha, int m) {
    const Grid g = make_grid(SamplingScheme{}, m);
    const SobolevKernel kernel(alpha);
    return eigendecompose(
        discretize(kernel_matrix(kernel, g), g, DiscretizedOperator::Label::sobolev_kernel));
}

}  // namespace

TEST_SUITE("operators") {

TEST_CASE("discretize checks the kernel block against the grid") {
    const Grid g = make_grid(SamplingScheme{}, 8);
    CHECK_THROWS_AS(discretize(mat_t::Identity(7, 7), g), shape_error);
    CHECK_THROWS_AS(discretize(mat_t::Ones(8, 7), g), shape_error);
    const DiscretizedOperator op = discretize(mat_t::Identity(8, 8), g);
    CHECK(op.sym.rows() == 8);
    // W^{1/2} I W^{1/2} = diag(w) on the equispaced grid.
    CHECK(op.sym(0, 0) == doctest::Approx(1.0 / 8.0).epsilon(1e-15));
    CHECK(op.sym(0, 1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("eigenpairs reconstruct the kernel matrix") {
    const int m = 128;
    const Grid g = make_grid(SamplingScheme{}, m);
    const SobolevKernel kernel(2);
    const mat_t gram = kernel_matrix(kernel, g);
    const SpectralDecomposition dec =
        eigendecompose(discretize(gram, g, DiscretizedOperator::Label::sobolev_kernel));

    mat_t rebuilt = mat_t::Zero(m, m);
    for (int j = 0; j < dec.rank(); ++j)
        rebuilt += dec.eigenvalue(j) * dec.psi().col(j) * dec.psi().col(j).transpose();
    const double rel = (rebuilt - gram).norm() / gram.norm();
    CHECK(rel < 1e-8);
}

TEST_CASE("eigenvalues descend and eigenfunctions are quadrature-orthonormal") {
    const SpectralDecomposition dec = decompose_kernel(2, 64);
    REQUIRE(dec.rank() >= 8);
    for (int j = 1; j < dec.rank(); ++j) CHECK(dec.eigenvalue(j) <= dec.eigenvalue(j - 1));
    CHECK(dec.eigenvalue(dec.rank() - 1) > 0.0);

    const vec_t w = dec.grid().weight_vector();
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            const double dot = (dec.psi().col(i).array() * dec.psi().col(j).array() *
                                w.array()).sum();
            CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
        }
}

TEST_CASE("coefficients invert the eigenfunction expansion") {
    const SpectralDecomposition dec = decompose_kernel(1, 32);
    const vec_t c = dec.coefficients(dec.psi().col(2));
    for (int j = 0; j < dec.rank(); ++j)
        CHECK(c[j] == doctest::Approx(j == 2 ? 1.0 : 0.0).epsilon(1e-10));
    CHECK_THROWS_AS(dec.coefficients(vec_t::Ones(31)), shape_error);
}

TEST_CASE("fractional powers act mode by mode") {
    const SpectralDecomposition dec = decompose_kernel(2, 32);
    const vec_t f = dec.psi().col(3);

    const vec_t once = fractional_apply(dec, 1.0, f);
    CHECK((once - dec.eigenvalue(3) * f).norm() < 1e-12);

    const vec_t half_half = fractional_apply(dec, 0.5, fractional_apply(dec, 0.5, f));
    CHECK((half_half - once).norm() < 1e-12);

    // The inverse power undoes the forward one on retained modes.
    const vec_t back = fractional_apply(dec, -1.0, once);
    CHECK((back - f).norm() < 1e-9);

    CHECK_THROWS_AS(fractional_apply(dec, -1.5, f), domain_error);
    CHECK_THROWS_AS(fractional_apply(dec, -0.5, f, 0.0), domain_error);
}

TEST_CASE("node lookup is exact-match only") {
    const Grid g = make_grid(SamplingScheme{}, 16);
    CHECK(find_node_index(g, 0.0) == 0);
    CHECK(find_node_index(g, 0.5) == 8);
    CHECK(find_node_index(g, 1.0) == 16);
    CHECK_THROWS_AS(find_node_index(g, 0.51), domain_error);
}

TEST_CASE("square-root sections integrate back to the kernel") {
    const int m = 64;
    const Grid g = make_grid(SamplingScheme{}, m);
    const SobolevKernel kernel(2);
    const mat_t gram = kernel_matrix(kernel, g);
    const SpectralDecomposition dec =
        eigendecompose(discretize(gram, g, DiscretizedOperator::Label::sobolev_kernel));
    const mat_t half = sqrt_kernel_matrix(dec);

    // sum_k w_k K^{1/2}(s, r_k) K^{1/2}(r_k, t) recovers K(s, t): the
    // square-root factorization and the quadrature share the same geometry.
    const vec_t w = g.weight_vector();
    const mat_t product = half * w.asDiagonal() * half;
    CHECK((product - gram).cwiseAbs().maxCoeff() < 1e-8 * gram.cwiseAbs().maxCoeff());

    CHECK(half(3, 5) == doctest::Approx(sqrt_kernel_eval(dec, g.node(3), g.node(5)))
                            .epsilon(1e-13));
    CHECK_THROWS_AS(sqrt_kernel_eval(dec, 1.0, 0.5), domain_error);  // weightless node
}

TEST_CASE("composition with the weighted identity returns the kernel spectrum") {
    const Grid g = make_grid(SamplingScheme{}, 32);
    const SobolevKernel kernel(2);
    const SpectralDecomposition lk = eigendecompose(
        discretize(kernel_matrix(kernel, g), g, DiscretizedOperator::Label::sobolev_kernel));

    DiscretizedOperator identity{g, mat_t::Identity(32, 32),
                                 DiscretizedOperator::Label::covariance_kernel};
    const DiscretizedOperator composed = compose_t_alpha(lk, identity);
    const SpectralDecomposition spec = eigendecompose(composed);
    for (int j = 0; j < 6; ++j)
        CHECK(spec.eigenvalue(j) == doctest::Approx(lk.eigenvalue(j)).epsilon(1e-10));

    const Grid other = make_grid(SamplingScheme{}, 16);
    DiscretizedOperator mismatched{other, mat_t::Identity(16, 16),
                                   DiscretizedOperator::Label::covariance_kernel};
    CHECK_THROWS_AS(compose_t_alpha(lk, mismatched), shape_error);
}

TEST_CASE("effective dimension has an exact two-mode reference") {
    // mu = {1, 1/4}, lambda = 1/2: 1/(3/2) + (1/4)/(3/4) = 2/3 + 1/3 = 1.
    CHECK(effective_dimension({1.0, 0.25}, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(effective_dimension({1.0}, 0.0), domain_error);
    CHECK_THROWS_AS(effective_dimension({-1.0}, 0.5), domain_error);

    const auto curve = effective_dimension_curve({1.0, 0.25, 0.0625}, {0.01, 0.1, 1.0});
    REQUIRE(curve.values.size() == 3);
    CHECK(curve.values[0] > curve.values[1]);
    CHECK(curve.values[1] > curve.values[2]);
}

TEST_CASE("the smoothness norm matches its coefficient form") {
    const SpectralDecomposition dec = decompose_kernel(2, 32);
    // beta = 2 sqrt(l_1) psi_1 + 3 sqrt(l_4) psi_4 has squared norm 4 + 9.
    const vec_t beta = 2.0 * std::sqrt(dec.eigenvalue(1)) * dec.psi().col(1) +
                       3.0 * std::sqrt(dec.eigenvalue(4)) * dec.psi().col(4);
    CHECK(sobolev_norm(dec, beta) == doctest::Approx(std::sqrt(13.0)).epsilon(1e-9));
    CHECK_THROWS_AS(sobolev_norm(dec, beta, -1.0), domain_error);
}

TEST_CASE("spectral dumps land on disk") {
    const SpectralDecomposition dec = decompose_kernel(1, 16);
    const auto dir = std::filesystem::temp_directory_path();
    const std::string js = (dir / "flr_test_spec.json").string();
    const std::string cs = (dir / "flr_test_spec.csv").string();
    save_spectral(dec, "grid-16", js, cs);

    std::ifstream jf(js);
    REQUIRE(jf.good());
    std::string first;
    std::getline(jf, first);
    CHECK(first.find('{') != std::string::npos);

    std::ifstream cf(cs);
    REQUIRE(cf.good());
    int rows = 0;
    std::string line;
    while (std::getline(cf, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 16);  // one row per weighted node

    std::remove(js.c_str());
    std::remove(cs.c_str());
}

}  // TEST_SUITE
