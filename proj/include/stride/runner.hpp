#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "stride/config.hpp"

namespace stride {

inline constexpr const char* kCodeVersion = "stride 0.1.0";

Genotype zero_balance_genotype(const RunConfig& c);

// Trial context for biped runs: contract, schedule, trajectories, weights and
// the fixed pre-evolved balance genotype.
BipedContext make_biped_context(const RunConfig& c, Genotype balance_genotype);

// Loads and checks the balance weights file referenced by the config.
// Unvalidated files are refused unless the config allows them.
BalanceFile load_checked_balance(const RunConfig& c);

std::unique_ptr<Evaluator> make_evaluator(const RunConfig& c,
                                          const Genotype* balance_genotype);

EngineConfig make_engine_config(const RunConfig& c);

struct RunResult {
    long generations = 0;
    long evaluations = 0;
    int max_deme_ever = 0;
    double best_score_ever = 0.0;
    std::string stop_reason;
    std::string checkpoint_path;
    AuditCounters audit;
};

// Full experiment loop: generation logs (CSV + JSONL), optional per-eval
// JSONL, periodic checkpoints, per-deme best genotypes and run metadata, all
// under config.out_dir. Deterministic for fixed (config, seed) regardless of
// worker count.
RunResult run_evolution(const RunConfig& c, const std::string& resume_checkpoint = {},
                        bool force_resume = false, std::ostream* progress = nullptr);

// One trial as per-tick JSONL (header line first). The unscored settle phase
// is not recorded.
void replay_trial(const RunConfig& c, const Genotype& g, int deme, std::uint64_t seed,
                  std::ostream& out);

// Five-trial evaluation through the exact run code path; trials != 5 runs a
// debugging subset with the same seed derivation.
EvalOutcome eval_genotype(const RunConfig& c, const Genotype& g, int deme,
                          std::uint64_t base_seed, int trials = kTrialsPerEvaluation);

void dump_trajectories_csv(const RunConfig& c, std::ostream& out, double dt = 0.01);

// Writes a genotype with the config hash embedded (replay checks it).
void save_genotype_with_hash(const Genotype& g, const std::string& cfg_hash,
                             const std::string& path);

} // namespace stride
