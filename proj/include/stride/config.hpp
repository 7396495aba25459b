#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stride/balance.hpp"
#include "stride/evolution.hpp"
#include "stride/neural.hpp"
#include "stride/plant.hpp"
#include "stride/scoring.hpp"
#include "stride/trajectory.hpp"

namespace stride {

enum class PlantKind { Biped, Chain };

struct RunBudgets {
    long max_generations = 1000;
    double wall_clock_s = 0.0;   // 0 = unlimited
    long max_evaluations = 0;    // 0 = unlimited
    int target_deme = -1;        // -1 = the evaluator's top deme
    long stable_generations = 0; // keep running this long after the target is reached
};

// Whole-run configuration. The JSON layout mirrors the sections below; a
// config round-trips through config_to_json with defaults filled in, and the
// run hash is the FNV-1a of that canonical dump.
struct RunConfig {
    PlantKind plant = PlantKind::Biped;
    BipedParams biped;
    ChainTaskParams chain;
    ScheduleConfig schedule;
    ComProfile com;
    GaitParams gait = default_gait();
    ScoreWeights weights;
    JitterSpec jitter;
    double settle_failure_score = -100.0;
    DemeConfig demes;           // empty thresholds -> threshold rule
    double threshold_rho = 0.8; // biped rule: tau_k = rho * w_time * controlled(k-1)
    double chain_threshold_slack = 0.1; // chain rule: tau_k = k * narrow_height - slack
    MutationParams mutation;
    BalancePretrainConfig balance;
    std::string balance_weights_path = "balance_weights.json";
    bool allow_unvalidated_balance = false;
    bool single_deme = false;
    std::uint64_t master_seed = 1;
    int workers = 1;
    RunBudgets budgets;
    std::string out_dir = "out";
    long checkpoint_every = 100;
    bool log_evaluations = true;
};

RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& c, int indent = -1);
void save_config(const RunConfig& c, const std::string& path);
std::string config_hash(const RunConfig& c);

// Explicit array if given (size-checked), else the plant-appropriate rule.
std::vector<double> resolve_thresholds(const RunConfig& c);

std::uint64_t fnv1a(std::string_view bytes);
std::string fnv1a_hex(std::string_view bytes);
std::string file_hash(const std::string& path);

} // namespace stride
