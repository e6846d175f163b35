#include <doctest.h>

#include <cmath>

#include "flr/bernoulli.hpp"
#include "flr/errors.hpp"

using namespace flr;

namespace {
constexpr double tol = 1e-15;
}

TEST_SUITE("bernoulli") {

TEST_CASE("low-degree polynomials match their closed forms") {
    const BernoulliTable table;
    const double ts[] = {0.0, 0.1, 0.3, 0.5, 0.6, 1.0};
    for (double t : ts) {
        CHECK(table.poly(0, t) == doctest::Approx(1.0).epsilon(tol));
        CHECK(table.poly(1, t) == doctest::Approx(t - 0.5).epsilon(tol));
        CHECK(table.poly(2, t) == doctest::Approx(t * t - t + 1.0 / 6.0).epsilon(tol));
        CHECK(table.poly(3, t) ==
              doctest::Approx(t * t * t - 1.5 * t * t + 0.5 * t).epsilon(tol));
        CHECK(table.poly(4, t) ==
              doctest::Approx(t * t * t * t - 2.0 * t * t * t + t * t - 1.0 / 30.0)
                  .epsilon(tol));
    }
    // Spot values with exact rational references: B_4(3/10) = 323/30000,
    // B_3(3/5) = -3/125.
    CHECK(table.poly(4, 0.3) == doctest::Approx(323.0 / 30000.0).epsilon(tol));
    CHECK(table.poly(3, 0.6) == doctest::Approx(-3.0 / 125.0).epsilon(tol));
}

TEST_CASE("Bernoulli numbers follow the zero-argument recurrence convention") {
    const BernoulliTable table;
    CHECK(table.number(0) == doctest::Approx(1.0).epsilon(tol));
    CHECK(table.number(1) == doctest::Approx(-0.5).epsilon(tol));
    CHECK(table.number(2) == doctest::Approx(1.0 / 6.0).epsilon(tol));
    CHECK(table.number(3) == doctest::Approx(0.0).epsilon(tol));
    CHECK(table.number(4) == doctest::Approx(-1.0 / 30.0).epsilon(tol));
    CHECK(table.number(5) == doctest::Approx(0.0).epsilon(tol));
    CHECK(table.number(6) == doctest::Approx(1.0 / 42.0).epsilon(tol));
    CHECK(table.number(8) == doctest::Approx(-1.0 / 30.0).epsilon(tol));
    CHECK(table.number(10) == doctest::Approx(5.0 / 66.0).epsilon(tol));
    CHECK(table.number(12) == doctest::Approx(-691.0 / 2730.0).epsilon(tol));
}

TEST_CASE("evaluation at 0 equals the Bernoulli number") {
    const BernoulliTable table;
    for (int k = 0; k <= table.max_degree(); ++k)
        CHECK(table.poly(k, 0.0) == doctest::Approx(table.number(k)).epsilon(tol));
}

TEST_CASE("symmetry B_k(1-t) = (-1)^k B_k(t)") {
    const BernoulliTable table;
    for (int k = 0; k <= 8; ++k)
        for (double t : {0.0, 0.2, 0.45, 0.7}) {
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            CHECK(table.poly(k, 1.0 - t) ==
                  doctest::Approx(sign * table.poly(k, t)).epsilon(1e-14));
        }
}

TEST_CASE("requests beyond the table raise capacity errors") {
    const BernoulliTable table(4);
    CHECK(table.max_degree() == 4);
    CHECK_THROWS_AS(table.poly(5, 0.5), capacity_error);
    CHECK_THROWS_AS(table.number(5), capacity_error);
    CHECK_THROWS_AS(table.poly(-1, 0.5), capacity_error);
    CHECK_THROWS_AS(BernoulliTable(-1), domain_error);
}

}  // TEST_SUITE
