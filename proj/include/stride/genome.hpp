#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stride/rng.hpp"

namespace stride {

inline constexpr int kChromosomeCount = 22;

// One chromosome = the full flat weight vector of one network.
struct Chromosome {
    std::string topology_id; // "step-off" | "walk" | "balance" | "chain"
    std::vector<double> weights;

    bool same_shape(const Chromosome& o) const {
        return topology_id == o.topology_id && weights.size() == o.weights.size();
    }
};

struct Genotype {
    std::uint64_t id = 0;
    std::array<std::uint64_t, 2> lineage{0, 0}; // parent ids, 0 = none
    std::vector<Chromosome> chromosomes;        // nets 0..21 in schedule order
};

struct ChromosomeShape {
    std::string topology_id;
    std::size_t weight_count;
};

struct MutationParams {
    double per_chromosome_rate = 0.10;
    double r_low = -1.1;
    double r_high = 0.9;
    double sign_flip_prob = 0.10;
    double zero_reseed_halfwidth = 0.1;
};

// Deterministic core of the weight mutation: scale by 10^r, then optionally
// negate. Exposed separately so tests can pin exact values.
double scaled_mutation(double w, double r, bool flip);

// w == 0: reseed uniform on [-halfwidth, +halfwidth] (no sign flip draw).
// Otherwise: w * 10^r with r ~ U(r_low, r_high), then negate with
// probability sign_flip_prob. Draw order: r, then the flip coin.
double mutate_weight(double w, const MutationParams& p, Rng& rng);

// With probability per_chromosome_rate, one uniformly chosen weight is
// replaced via mutate_weight; otherwise returns the input unchanged.
Chromosome mutate_chromosome(const Chromosome& c, const MutationParams& p, Rng& rng);

// Whole-chromosome segregation: child chromosome i is a verbatim copy of
// a's or b's chromosome i, a fair coin per position. No within-chromosome
// mixing. Throws StructuralError on shape mismatch.
Genotype reproduce(const Genotype& a, const Genotype& b, std::uint64_t child_id, Rng& rng);

// All-zero genotype for the given shapes. Zero weights mean zero deviation
// from the suggested trajectories; the zero-weight mutation rule then seeds
// small values.
Genotype make_zero_genotype(const std::vector<ChromosomeShape>& shapes, std::uint64_t id);

void validate_genotype(const Genotype& g, const std::vector<ChromosomeShape>& shapes);

// JSON persistence (lossless doubles). save writes a "stride-genotype" v1
// document; load validates the format tag and finiteness.
std::string genotype_to_json(const Genotype& g);
Genotype genotype_from_json(const std::string& text);
void save_genotype(const Genotype& g, const std::string& path);
Genotype load_genotype(const std::string& path);

} // namespace stride
