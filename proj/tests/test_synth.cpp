#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "flr/errors.hpp"
#include "flr/rng.hpp"
#include "flr/synth.hpp"

using namespace flr;

namespace {

std::shared_ptr<const SpectralDecomposition> kernel_basis(int alpha, int m) {
    const Grid g = make_grid(SamplingScheme{}, m);
    const SobolevKernel kernel(alpha);
    return std::make_shared<SpectralDecomposition>(eigendecompose(
        discretize(kernel_matrix(kernel, g), g, DiscretizedOperator::Label::sobolev_kernel)));
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("the truth pins its spectral ingredients") {
    auto lk = kernel_basis(2, 64);
    const GroundTruth gt = build_ground_truth(lk, 2, 0.5, 1.0, 12, 99);

    REQUIRE(gt.mu.size() == 12);
    CHECK(gt.mu[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(gt.mu[1] == doctest::Approx(0.25).epsilon(1e-15));  // 2^{-1/p}, p = 1/2
    CHECK(gt.mu[3] == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
    for (int j = 0; j < 12; ++j)
        CHECK(gt.nu[j] == doctest::Approx(gt.mu[j] / lk->eigenvalue(j)).epsilon(1e-15));

    CHECK(gt.g0.norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < 12; ++j)
        CHECK(gt.f0[j] == doctest::Approx(std::pow(gt.mu[j], 1.0) * gt.g0[j]).epsilon(1e-14));

    double budget = 0.0;
    for (int j = 0; j < 12; ++j) budget += gt.nu[j] / lk->eigenvalue(j);
    CHECK(gt.kappa_sq == doctest::Approx(budget).epsilon(1e-12));
}

TEST_CASE("theta = 0 leaves the certificate untouched") {
    auto lk = kernel_basis(2, 64);
    const GroundTruth gt = build_ground_truth(lk, 2, 0.5, 0.0, 8, 5);
    for (int j = 0; j < 8; ++j) CHECK(gt.f0[j] == gt.g0[j]);
}

TEST_CASE("the composed operator carries exactly the designed spectrum") {
    auto lk = kernel_basis(2, 64);
    const int modes = 10;
    const GroundTruth gt = build_ground_truth(lk, 2, 0.5, 1.0, modes, 17);
    const DiscretizedOperator lc = build_covariance(gt);
    const SpectralDecomposition composed = eigendecompose(compose_t_alpha(*lk, lc));

    REQUIRE(composed.rank() >= modes);
    for (int j = 0; j < modes; ++j)
        CHECK(composed.eigenvalue(j) == doctest::Approx(gt.mu[j]).epsilon(1e-10));
    // Nothing lives beyond the designed band.
    if (composed.rank() > modes)
        CHECK(composed.eigenvalue(modes) < 1e-10 * composed.eigenvalue(0));
}

TEST_CASE("the slope's smoothness norm equals its coefficient norm") {
    auto lk = kernel_basis(2, 64);
    const GroundTruth gt = build_ground_truth(lk, 2, 0.5, 1.0, 12, 23);
    const vec_t beta0 = beta0_node_values(gt);
    CHECK(sobolev_norm(*lk, beta0) == doctest::Approx(gt.f0.norm()).epsilon(1e-8));

    // And the node values expand as psi * (sqrt(lambda) .* f0).
    vec_t expected = vec_t::Zero(64);
    for (int j = 0; j < gt.modes; ++j)
        expected += std::sqrt(lk->eigenvalue(j)) * gt.f0[j] * lk->psi().col(j);
    CHECK((beta0 - expected).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("covariate curves reproduce the designed covariance") {
    auto lk = kernel_basis(2, 32);
    const GroundTruth gt = build_ground_truth(lk, 2, 0.5, 1.0, 6, 31);
    const int n = 20000;
    const mat_t X = sample_x(gt, n, 404);
    REQUIRE(X.rows() == n);
    REQUIRE(X.cols() == 33);

    // Mode scores by quadrature against the basis.
    const vec_t w = lk->grid().weight_vector();
    mat_t scores(n, gt.modes);
    for (int j = 0; j < gt.modes; ++j)
        scores.col(j) = X.leftCols(32) * w.cwiseProduct(lk->psi().col(j));

    for (int j = 0; j < gt.modes; ++j) {
        const double var = scores.col(j).squaredNorm() / n;
        CHECK(var == doctest::Approx(gt.nu[j]).epsilon(0.05));
        for (int k = j + 1; k < gt.modes; ++k) {
            const double cov = scores.col(j).dot(scores.col(k)) / n;
            CHECK(std::abs(cov) < 0.05 * std::sqrt(gt.nu[j] * gt.nu[k]));
        }
    }
}

TEST_CASE("noiseless responses equal the quadrature pairing with the slope") {
    auto lk = kernel_basis(2, 64);
    const GroundTruth gt = build_ground_truth(lk, 2, 0.5, 1.0, 10, 77);
    const Dataset data = gen_dataset(gt, lk->grid(), 50, NoiseSpec{0.0}, 2024);
    const vec_t beta0 = beta0_node_values(gt);

    // The spectral shortcut and the left-rule integral agree exactly on the
    // decomposition's own grid: the basis is quadrature-orthonormal there.
    for (int i = 0; i < data.n(); ++i) {
        const double quad = riemann_sum(data.grid, data.X.row(i).head(64).transpose()
                                                       .cwiseProduct(beta0));
        CHECK(data.y[i] == doctest::Approx(quad).epsilon(1e-11));
    }
}

TEST_CASE("response variance decomposes into signal plus noise") {
    auto lk = kernel_basis(2, 32);
    const GroundTruth gt = build_ground_truth(lk, 2, 0.5, 1.0, 6, 12);
    const double sigma = 0.3;
    const int n = 40000;
    const Dataset data = gen_dataset(gt, lk->grid(), n, NoiseSpec{sigma}, 55);

    double signal = 0.0;  // sum_j mu_j^{1+2 theta} g0_j^2
    for (int j = 0; j < gt.modes; ++j)
        signal += std::pow(gt.mu[j], 1.0 + 2.0 * gt.theta) * gt.g0[j] * gt.g0[j];
    const double expected = signal + sigma * sigma;
    const double measured = data.y.squaredNorm() / n;
    CHECK(measured == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("datasets are reproducible per seed and nest across noise draws") {
    auto lk = kernel_basis(2, 32);
    const GroundTruth gt = build_ground_truth(lk, 2, 0.5, 1.0, 6, 3);
    const Dataset a = gen_dataset(gt, lk->grid(), 16, NoiseSpec{0.5}, 42);
    const Dataset b = gen_dataset(gt, lk->grid(), 16, NoiseSpec{0.5}, 42);
    CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);

    const Dataset c = gen_dataset(gt, lk->grid(), 16, NoiseSpec{0.5}, 43);
    CHECK((a.y - c.y).cwiseAbs().maxCoeff() > 0.0);

    // Same seed, zero noise: identical covariates, de-noised responses.
    const Dataset d = gen_dataset(gt, lk->grid(), 16, NoiseSpec{0.0}, 42);
    CHECK((a.X - d.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y - d.y).cwiseAbs().maxCoeff() > 0.0);

    // The covariate curves match sample_x under the same seed.
    const mat_t direct = sample_x(gt, 16, 42);
    CHECK((a.X - direct).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fourth-moment ratios sit near the Gaussian value") {
    auto lk = kernel_basis(2, 32);
    const GroundTruth gt = build_ground_truth(lk, 2, 0.5, 1.0, 6, 8);
    const KurtosisReport report = kurtosis_probe(gt, 20000, 31, 5);
    REQUIRE(report.ratios.size() == 5);
    for (double r : report.ratios) {
        CHECK(r > 2.5);
        CHECK(r < 3.5);
    }
    CHECK_THROWS_AS(kurtosis_probe(gt, 5000, 31, 5), domain_error);
    CHECK_THROWS_AS(kurtosis_probe(gt, 20000, 31, 0), domain_error);
}

TEST_CASE("truth construction validates its arguments") {
    auto lk = kernel_basis(2, 64);
    CHECK_THROWS_AS(build_ground_truth(nullptr, 2, 0.5, 1.0, 4, 1), domain_error);
    CHECK_THROWS_AS(build_ground_truth(lk, 2, 0.0, 1.0, 4, 1), domain_error);
    CHECK_THROWS_AS(build_ground_truth(lk, 2, 1.5, 1.0, 4, 1), domain_error);
    CHECK_THROWS_AS(build_ground_truth(lk, 2, 0.5, -0.5, 4, 1), domain_error);
    CHECK_THROWS_AS(build_ground_truth(lk, 2, 0.5, 1.0, 0, 1), domain_error);
    CHECK_THROWS_AS(build_ground_truth(lk, 2, 0.5, 1.0, lk->rank() + 1, 1), capacity_error);
}

TEST_CASE("mode counts respect the spectral floor") {
    auto lk = kernel_basis(2, 128);
    const double floor = 1e-11 * lk->eigenvalue(0);

    const int count = default_mode_count(*lk);
    CHECK(count >= 1);
    CHECK(count <= 64);
    CHECK(count <= lk->rank() / 2);
    CHECK(lk->eigenvalue(count - 1) >= floor);
    if (count < std::min(64, lk->rank() / 2)) CHECK(lk->eigenvalue(count) < floor);

    CHECK(default_mode_count(*lk, 8) <= 8);
    CHECK(default_mode_count(*lk, 8) >= 1);

    // A band reaching under the floor is refused outright.
    if (lk->eigenvalue(lk->rank() - 1) < floor)
        CHECK_THROWS_AS(build_ground_truth(lk, 2, 0.5, 1.0, lk->rank(), 1), numeric_error);
}

TEST_CASE("datasets demand grids made of decomposition nodes") {
    auto lk = kernel_basis(2, 32);
    const GroundTruth gt = build_ground_truth(lk, 2, 0.5, 1.0, 6, 3);
    const Grid offgrid = make_grid(SamplingScheme{}, 24);  // 1/24 is not a node of 1/32
    CHECK_THROWS_AS(gen_dataset(gt, offgrid, 8, NoiseSpec{0.0}, 1), domain_error);
    CHECK_THROWS_AS(gen_dataset(gt, lk->grid(), 0, NoiseSpec{0.0}, 1), domain_error);
    CHECK_THROWS_AS(gen_dataset(gt, lk->grid(), 8, NoiseSpec{-0.1}, 1), domain_error);
}

TEST_CASE("ground-truth dumps are deterministic") {
    auto lk = kernel_basis(2, 32);
    const GroundTruth a = build_ground_truth(lk, 2, 0.5, 1.0, 6, 3);
    const GroundTruth b = build_ground_truth(lk, 2, 0.5, 1.0, 6, 3);
    std::ostringstream ja, jb;
    write_ground_truth_json(a, ja);
    write_ground_truth_json(b, jb);
    CHECK(ja.str() == jb.str());
    CHECK(ja.str().find("\"kappa_sq\"") != std::string::npos);
    CHECK(ja.str().find("\"mu\"") != std::string::npos);
}

}  // TEST_SUITE
