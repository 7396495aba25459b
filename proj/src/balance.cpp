#include "stride/balance.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stride/errors.hpp"
#include "stride/evolution.hpp"

namespace stride {

namespace {
constexpr std::uint64_t kTagValidate = 0xBA1;
}

int validate_balance(const BipedContext& ctx, const BalancePretrainConfig& cfg,
                     const Genotype& candidate, std::uint64_t seed) {
    int passes = 0;
    for (int i = 0; i < cfg.validation_trials; ++i) {
        const std::uint64_t s = derive_seed(seed, kTagValidate, static_cast<std::uint64_t>(i));
        const MetricAccumulator acc = run_balance_trial(ctx, cfg.task, candidate, s);
        if (!acc.fell && acc.t_alive >= cfg.required_uptime) ++passes;
    }
    return passes;
}

BalancePretrainResult pretrain_balance(const BipedContext& ctx,
                                       const BalancePretrainConfig& cfg, std::uint64_t seed,
                                       const std::function<void(long, double)>& progress) {
    BalanceEvaluator evaluator(ctx, cfg.task);

    EngineConfig ec;
    ec.demes.deme_count = 1;
    ec.demes.per_deme_capacity = cfg.population;
    ec.demes.global_capacity = cfg.population;
    ec.demes.thresholds = {-std::numeric_limits<double>::infinity()};
    ec.single_deme = true;
    ec.master_seed = seed;
    ec.workers = cfg.workers;

    Engine engine(ec, evaluator);
    engine.initialize();

    BalancePretrainResult result;
    result.best = engine.population().front().genotype;

    auto check = [&](long gen) -> bool {
        const Individual* best = engine.best_in_deme(0);
        if (!best) return false;
        const int passes = validate_balance(ctx, cfg, best->genotype, seed);
        if (progress) progress(gen, best->rank_score);
        if (passes > result.validation_passes ||
            (passes == result.validation_passes && best->rank_score > result.best_score)) {
            result.validation_passes = passes;
            result.best = best->genotype;
            result.best_score = best->rank_score;
        }
        return passes >= cfg.validation_required;
    };

    for (long gen = 0; gen < cfg.max_generations; ++gen) {
        engine.step_generation();
        result.generations = engine.generation();
        if (gen % cfg.check_every == 0 || gen == cfg.max_generations - 1) {
            if (check(engine.generation())) {
                result.validated = true;
                return result;
            }
        }
    }
    return result;
}

void save_balance_file(const BalanceFile& f, const std::string& path) {
    nlohmann::json j;
    j["format"] = "stride-balance";
    j["version"] = 1;
    j["validated"] = f.validated;
    j["config_hash"] = f.config_hash;
    j["score"] = f.score;
    j["genotype"] = nlohmann::json::parse(genotype_to_json(f.genotype));
    std::ofstream out(path);
    if (!out) throw StructuralError("cannot write balance file: " + path);
    out << j.dump(2) << "\n";
}

BalanceFile load_balance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open balance file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("balance file parse error: ") + e.what());
    }
    if (j.value("format", "") != "stride-balance")
        throw StructuralError("not a stride-balance file: " + path);
    BalanceFile f;
    f.validated = j.value("validated", false);
    f.config_hash = j.value("config_hash", "");
    f.score = j.value("score", 0.0);
    f.genotype = genotype_from_json(j.at("genotype").dump());
    return f;
}

} // namespace stride
