#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "stride/rng.hpp"

using namespace stride;

TEST_CASE("streams are deterministic and seed-separated") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t x = a.next_u64();
        CHECK(x == b.next_u64());
    }
    int same = 0;
    Rng a2(42);
    for (int i = 0; i < 1000; ++i)
        if (a2.next_u64() == c.next_u64()) ++same;
    CHECK(same == 0);
}

TEST_CASE("derive_seed separates tagged streams") {
    const auto s1 = derive_seed(7, 1);
    const auto s2 = derive_seed(7, 2);
    const auto s3 = derive_seed(7, 1, 2);
    const auto s4 = derive_seed(7, 2, 1);
    CHECK(s1 != s2);
    CHECK(s3 != s4);
    CHECK(derive_seed(7, 1) == s1);
}

TEST_CASE("uniform01 covers [0,1)") {
    Rng r(5);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
}

TEST_CASE("below(n) is roughly uniform") {
    Rng r(6);
    std::vector<int> counts(10, 0);
    const int n = 200000;
    for (int i = 0; i < n; ++i) counts[r.below(10)] += 1;
    for (int c : counts) CHECK(std::abs(c / static_cast<double>(n) - 0.1) < 0.01);
}

TEST_CASE("normal(0, sqrt(0.3)) has the right moments") {
    // the migration step distribution: mean 0, variance 0.3 within 1%
    Rng r(7);
    const int n = 1000000;
    const double sigma = std::sqrt(0.3);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal(0.0, sigma);
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.002);
    CHECK(std::abs(var - 0.3) / 0.3 < 0.01);
}
