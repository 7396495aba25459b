#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "stride/scoring.hpp"

namespace stride {

struct BalancePretrainConfig {
    BalanceTaskParams task;
    int population = 30;
    long max_generations = 400;
    int validation_trials = 10;
    int validation_required = 9;
    double required_uptime = 10.0; // seconds standing to count a validation pass
    int check_every = 10;          // validate the best candidate every N generations
    int workers = 1;
};

struct BalancePretrainResult {
    Genotype best;
    bool validated = false;
    long generations = 0;
    int validation_passes = 0;
    double best_score = 0.0;
};

// Single-deme GA (same mutation / reproduction operators, one balance
// chromosome) on the standing task. Stops when the best candidate stands for
// required_uptime in >= validation_required of validation_trials trials, or
// when the generation budget runs out (result flagged unvalidated).
BalancePretrainResult pretrain_balance(const BipedContext& ctx,
                                       const BalancePretrainConfig& cfg, std::uint64_t seed,
                                       const std::function<void(long, double)>& progress = {});

// Validation pass count for an arbitrary candidate.
int validate_balance(const BipedContext& ctx, const BalancePretrainConfig& cfg,
                     const Genotype& candidate, std::uint64_t seed);

// Balance weights file: the genotype plus a validation marker. Walking runs
// refuse unvalidated files unless explicitly overridden.
struct BalanceFile {
    Genotype genotype;
    bool validated = false;
    std::string config_hash;
    double score = 0.0;
};

void save_balance_file(const BalanceFile& f, const std::string& path);
BalanceFile load_balance_file(const std::string& path);

} // namespace stride
