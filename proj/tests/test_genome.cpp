#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "stride/errors.hpp"
#include "stride/genome.hpp"

using namespace stride;

namespace {

std::vector<ChromosomeShape> toy_shapes(std::size_t len = 4) {
    return std::vector<ChromosomeShape>(kChromosomeCount, ChromosomeShape{"walk", len});
}

Genotype random_genotype(const std::vector<ChromosomeShape>& shapes, std::uint64_t id,
                         Rng& rng) {
    Genotype g = make_zero_genotype(shapes, id);
    for (auto& c : g.chromosomes)
        for (auto& w : c.weights) w = rng.uniform(-2.0, 2.0);
    return g;
}

// two-sided Kolmogorov-Smirnov statistic against U(lo, hi)
double ks_uniform(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double cdf = (xs[i] - lo) / (hi - lo);
        d = std::max(d, std::abs((i + 1) / n - cdf));
        d = std::max(d, std::abs(cdf - i / n));
    }
    return d;
}

} // namespace

TEST_CASE("scaled_mutation pins the paper arithmetic") {
    // w=1, r=0.9, no flip -> 10^0.9
    CHECK(scaled_mutation(1.0, 0.9, false) == doctest::Approx(7.943282347).epsilon(1e-9));
    // w=-2, r=-1.1, flip -> +2*10^-1.1
    CHECK(scaled_mutation(-2.0, -1.1, true) == doctest::Approx(0.158866).epsilon(1e-4));
    CHECK(scaled_mutation(-2.0, -1.1, false) ==
          doctest::Approx(-0.158866).epsilon(1e-4));
}

TEST_CASE("mutate_weight zero reseed is uniform on [-0.1, 0.1]") {
    MutationParams p;
    Rng rng(11);
    std::vector<double> xs;
    xs.reserve(100000);
    for (int i = 0; i < 100000; ++i) {
        const double w = mutate_weight(0.0, p, rng);
        REQUIRE(w >= -0.1);
        REQUIRE(w <= 0.1);
        xs.push_back(w);
    }
    CHECK(ks_uniform(xs, -0.1, 0.1) < 0.01);
}

TEST_CASE("mutate_weight scale exponent is uniform and sign flips at 10%") {
    MutationParams p;
    Rng rng(12);
    const int n = 1000000;
    std::vector<double> exps;
    exps.reserve(n);
    int flips = 0;
    for (int i = 0; i < n; ++i) {
        const double w = mutate_weight(1.0, p, rng);
        exps.push_back(std::log10(std::abs(w)));
        if (w < 0) ++flips;
    }
    CHECK(ks_uniform(exps, -1.1, 0.9) < 0.005);
    CHECK(std::abs(flips / static_cast<double>(n) - 0.10) < 0.003);
}

TEST_CASE("mutate_weight stays within the multiplicative band") {
    MutationParams p;
    Rng rng(13);
    for (int i = 0; i < 10000; ++i) {
        const double w0 = rng.uniform(-5.0, 5.0);
        if (w0 == 0.0) continue;
        const double w1 = mutate_weight(w0, p, rng);
        const double ratio = std::abs(w1 / w0);
        CHECK(ratio >= std::pow(10.0, -1.1) * (1 - 1e-12));
        CHECK(ratio <= std::pow(10.0, 0.9) * (1 + 1e-12));
        CHECK(std::isfinite(w1));
    }
}

TEST_CASE("mutate_chromosome rate-zero identity and rate-one single change") {
    Chromosome c{"walk", {0.5, -1.0, 2.0}};
    Rng rng(21);

    MutationParams none;
    none.per_chromosome_rate = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Chromosome out = mutate_chromosome(c, none, rng);
        CHECK(out.weights == c.weights);
    }

    MutationParams always;
    always.per_chromosome_rate = 1.0;
    Chromosome single{"walk", {1.0}};
    const Chromosome out = mutate_chromosome(single, always, rng);
    CHECK(out.weights[0] != 1.0);
}

TEST_CASE("mutate_chromosome changes at most one weight") {
    MutationParams p;
    Rng rng(22);
    Chromosome c{"walk", std::vector<double>(40, 0.0)};
    for (auto& w : c.weights) w = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const Chromosome out = mutate_chromosome(c, p, rng);
        int diff = 0;
        for (std::size_t j = 0; j < c.weights.size(); ++j)
            if (out.weights[j] != c.weights[j]) ++diff;
        CHECK(diff <= 1);
    }
}

TEST_CASE("mutate_chromosome fires at the configured rate") {
    // binomial(1e5, 0.1): sd of the fraction ~0.00095, spec band 0.10 +- 0.005
    MutationParams p;
    Rng rng(23);
    Chromosome c{"walk", std::vector<double>(10, 1.0)};
    const int n = 100000;
    int changed = 0;
    for (int i = 0; i < n; ++i) {
        const Chromosome out = mutate_chromosome(c, p, rng);
        if (out.weights != c.weights) ++changed;
    }
    CHECK(std::abs(changed / static_cast<double>(n) - 0.10) < 0.005);
}

TEST_CASE("reproduce: identical parents give an identical child") {
    Rng rng(31);
    const auto shapes = toy_shapes();
    const Genotype a = random_genotype(shapes, 1, rng);
    const Genotype child = reproduce(a, a, 99, rng);
    CHECK(child.id == 99);
    CHECK(child.lineage[0] == 1);
    CHECK(child.chromosomes.size() == kChromosomeCount);
    for (int i = 0; i < kChromosomeCount; ++i)
        CHECK(child.chromosomes[i].weights == a.chromosomes[i].weights);
}

TEST_CASE("reproduce segregates whole chromosomes, fairly") {
    Rng rng(32);
    const auto shapes = toy_shapes();
    const Genotype a = random_genotype(shapes, 1, rng);
    const Genotype b = random_genotype(shapes, 2, rng);

    const int n = 10000;
    std::array<int, kChromosomeCount> from_a{};
    for (int it = 0; it < n; ++it) {
        const Genotype child = reproduce(a, b, 100 + it, rng);
        for (int i = 0; i < kChromosomeCount; ++i) {
            const bool is_a = child.chromosomes[i].weights == a.chromosomes[i].weights;
            const bool is_b = child.chromosomes[i].weights == b.chromosomes[i].weights;
            // never byte-different from both parents' chromosome i
            REQUIRE((is_a || is_b));
            if (is_a) ++from_a[i];
        }
    }
    for (int i = 0; i < kChromosomeCount; ++i)
        CHECK(std::abs(from_a[i] / static_cast<double>(n) - 0.5) < 0.02);
}

TEST_CASE("reproduce rejects mismatched shapes") {
    Rng rng(33);
    const Genotype a = random_genotype(toy_shapes(4), 1, rng);
    const Genotype b = random_genotype(toy_shapes(5), 2, rng);
    CHECK_THROWS_AS(reproduce(a, b, 3, rng), StructuralError);
}

TEST_CASE("operators are pure functions of the rng stream") {
    const auto shapes = toy_shapes();
    Rng r1(77), r2(77);
    const Genotype a = random_genotype(shapes, 1, r1);
    const Genotype b = random_genotype(shapes, 1, r2);
    for (int i = 0; i < kChromosomeCount; ++i)
        CHECK(a.chromosomes[i].weights == b.chromosomes[i].weights);

    MutationParams p;
    Rng m1(78), m2(78);
    for (int i = 0; i < 200; ++i) {
        const Chromosome c1 = mutate_chromosome(a.chromosomes[i % kChromosomeCount], p, m1);
        const Chromosome c2 = mutate_chromosome(a.chromosomes[i % kChromosomeCount], p, m2);
        CHECK(c1.weights == c2.weights);
    }
}

TEST_CASE("zero genotype matches shapes and is all zero") {
    const auto shapes = toy_shapes(7);
    const Genotype g = make_zero_genotype(shapes, 5);
    CHECK(g.chromosomes.size() == kChromosomeCount);
    for (const auto& c : g.chromosomes) {
        CHECK(c.weights.size() == 7);
        for (double w : c.weights) CHECK(w == 0.0);
    }
    CHECK_NOTHROW(validate_genotype(g, shapes));
}

TEST_CASE("genotype json round-trips bit-exactly") {
    Rng rng(41);
    const auto shapes = toy_shapes(9);
    Genotype g = random_genotype(shapes, 123, rng);
    g.lineage = {11, 12};
    // include values that stress decimal round-tripping
    g.chromosomes[0].weights[0] = 0.1;
    g.chromosomes[0].weights[1] = 1.0 / 3.0;
    g.chromosomes[0].weights[2] = 1e-300;

    const Genotype h = genotype_from_json(genotype_to_json(g));
    CHECK(h.id == g.id);
    CHECK(h.lineage == g.lineage);
    REQUIRE(h.chromosomes.size() == g.chromosomes.size());
    for (std::size_t i = 0; i < g.chromosomes.size(); ++i) {
        CHECK(h.chromosomes[i].topology_id == g.chromosomes[i].topology_id);
        REQUIRE(h.chromosomes[i].weights.size() == g.chromosomes[i].weights.size());
        CHECK(std::memcmp(h.chromosomes[i].weights.data(), g.chromosomes[i].weights.data(),
                          g.chromosomes[i].weights.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("validate_genotype flags corruption") {
    const auto shapes = toy_shapes();
    Genotype g = make_zero_genotype(shapes, 1);
    g.chromosomes[3].weights.push_back(0.0);
    CHECK_THROWS_AS(validate_genotype(g, shapes), StructuralError);

    Genotype h = make_zero_genotype(shapes, 1);
    h.chromosomes[0].topology_id = "nope";
    CHECK_THROWS_AS(validate_genotype(h, shapes), StructuralError);

    Genotype k = make_zero_genotype(shapes, 1);
    k.chromosomes[1].weights[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(validate_genotype(k, shapes), StructuralError);
}
