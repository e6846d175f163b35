#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "flr/rng.hpp"

using namespace flr;

TEST_SUITE("rng") {

TEST_CASE("derive_seed separates tags and indices") {
    const std::uint64_t master = 12345;
    CHECK(derive_seed(master, "xi") == derive_seed(master, "xi"));
    CHECK(derive_seed(master, "xi") != derive_seed(master, "eps"));
    CHECK(derive_seed(master, "trial", 0) != derive_seed(master, "trial", 1));
    CHECK(derive_seed(master, "trial", 1) != derive_seed(master + 1, "trial", 1));
}

TEST_CASE("identical seeds reproduce identical streams") {
    RandomStream a(987654321), b(987654321);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("uniform draws stay strictly inside (0,1)") {
    RandomStream rs(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rs.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal moments match a standard Gaussian") {
    RandomStream rs(2024);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rs.normal();
        s1 += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    const double kurt = (s4 / n) / (var * var);
    CHECK(std::abs(mean) < 0.01);       // s.e. ~ 0.0022
    CHECK(std::abs(var - 1.0) < 0.02);  // s.e. ~ 0.0032
    CHECK(std::abs(kurt - 3.0) < 0.1);  // s.e. ~ 0.011
}

TEST_CASE("below produces every residue without bias artifacts") {
    RandomStream rs(55);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) {
        const std::uint64_t v = rs.below(5);
        REQUIRE(v < 5);
        ++counts[static_cast<std::size_t>(v)];
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);  // ~5.6 s.d.
}

TEST_CASE("sign alternates between exactly +1 and -1") {
    RandomStream rs(3);
    int plus = 0, minus = 0;
    for (int i = 0; i < 1000; ++i) {
        const int s = rs.sign();
        REQUIRE((s == 1 || s == -1));
        (s == 1 ? plus : minus)++;
    }
    CHECK(plus > 400);
    CHECK(minus > 400);
}

TEST_CASE("deterministic_shuffle permutes and reproduces") {
    std::vector<int> v(32);
    for (int i = 0; i < 32; ++i) v[static_cast<std::size_t>(i)] = i;
    std::vector<int> w(v);
    RandomStream a(11), b(11);
    deterministic_shuffle(v, a);
    deterministic_shuffle(w, b);
    CHECK(v == w);

    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 32; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);

    std::vector<int> u(32);
    for (int i = 0; i < 32; ++i) u[static_cast<std::size_t>(i)] = i;
    RandomStream c(12);
    deterministic_shuffle(u, c);
    CHECK(u != v);  // a different seed moves the permutation
}

}  // TEST_SUITE
