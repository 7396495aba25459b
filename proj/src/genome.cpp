#include "stride/genome.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stride/errors.hpp"

namespace stride {

double scaled_mutation(double w, double r, bool flip) {
    double out = w * std::pow(10.0, r);
    return flip ? -out : out;
}

double mutate_weight(double w, const MutationParams& p, Rng& rng) {
    if (w == 0.0) {
        return rng.uniform(-p.zero_reseed_halfwidth, p.zero_reseed_halfwidth);
    }
    const double r = rng.uniform(p.r_low, p.r_high);
    const bool flip = rng.bernoulli(p.sign_flip_prob);
    return scaled_mutation(w, r, flip);
}

Chromosome mutate_chromosome(const Chromosome& c, const MutationParams& p, Rng& rng) {
    if (!rng.bernoulli(p.per_chromosome_rate) || c.weights.empty())
        return c;
    Chromosome out = c;
    const std::size_t idx = rng.below(out.weights.size());
    out.weights[idx] = mutate_weight(out.weights[idx], p, rng);
    return out;
}

Genotype reproduce(const Genotype& a, const Genotype& b, std::uint64_t child_id, Rng& rng) {
    if (a.chromosomes.size() != b.chromosomes.size())
        throw StructuralError("reproduce: parents have different chromosome counts");
    Genotype child;
    child.id = child_id;
    child.lineage = {a.id, b.id};
    child.chromosomes.reserve(a.chromosomes.size());
    for (std::size_t i = 0; i < a.chromosomes.size(); ++i) {
        if (!a.chromosomes[i].same_shape(b.chromosomes[i]))
            throw StructuralError("reproduce: chromosome " + std::to_string(i) +
                                  " shape mismatch between parents");
        child.chromosomes.push_back(rng.coin() ? a.chromosomes[i] : b.chromosomes[i]);
    }
    return child;
}

Genotype make_zero_genotype(const std::vector<ChromosomeShape>& shapes, std::uint64_t id) {
    Genotype g;
    g.id = id;
    g.chromosomes.reserve(shapes.size());
    for (const auto& s : shapes) {
        Chromosome c;
        c.topology_id = s.topology_id;
        c.weights.assign(s.weight_count, 0.0);
        g.chromosomes.push_back(std::move(c));
    }
    return g;
}

void validate_genotype(const Genotype& g, const std::vector<ChromosomeShape>& shapes) {
    if (g.chromosomes.size() != shapes.size())
        throw StructuralError("genotype has " + std::to_string(g.chromosomes.size()) +
                              " chromosomes, expected " + std::to_string(shapes.size()));
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto& c = g.chromosomes[i];
        if (c.topology_id != shapes[i].topology_id)
            throw StructuralError("chromosome " + std::to_string(i) + " topology '" +
                                  c.topology_id + "' does not match schedule '" +
                                  shapes[i].topology_id + "'");
        if (c.weights.size() != shapes[i].weight_count)
            throw StructuralError("chromosome " + std::to_string(i) + " has " +
                                  std::to_string(c.weights.size()) + " weights, expected " +
                                  std::to_string(shapes[i].weight_count));
        for (double w : c.weights)
            if (!std::isfinite(w))
                throw StructuralError("chromosome " + std::to_string(i) +
                                      " contains a non-finite weight");
    }
}

namespace {

nlohmann::json genotype_json(const Genotype& g) {
    nlohmann::json j;
    j["format"] = "stride-genotype";
    j["version"] = 1;
    j["id"] = g.id;
    j["lineage"] = g.lineage;
    auto& arr = j["chromosomes"] = nlohmann::json::array();
    for (const auto& c : g.chromosomes)
        arr.push_back({{"topology_id", c.topology_id}, {"weights", c.weights}});
    return j;
}

} // namespace

std::string genotype_to_json(const Genotype& g) {
    return genotype_json(g).dump();
}

Genotype genotype_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("genotype parse error: ") + e.what());
    }
    if (j.value("format", "") != "stride-genotype")
        throw StructuralError("not a stride-genotype file");
    Genotype g;
    g.id = j.at("id").get<std::uint64_t>();
    if (j.contains("lineage"))
        g.lineage = j.at("lineage").get<std::array<std::uint64_t, 2>>();
    for (const auto& cj : j.at("chromosomes")) {
        Chromosome c;
        c.topology_id = cj.at("topology_id").get<std::string>();
        c.weights = cj.at("weights").get<std::vector<double>>();
        for (double w : c.weights)
            if (!std::isfinite(w))
                throw StructuralError("genotype file contains a non-finite weight");
        g.chromosomes.push_back(std::move(c));
    }
    return g;
}

void save_genotype(const Genotype& g, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw StructuralError("cannot open genotype file for writing: " + path);
    out << genotype_json(g).dump(2) << "\n";
}

Genotype load_genotype(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw StructuralError("cannot open genotype file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return genotype_from_json(buf.str());
}

} // namespace stride
