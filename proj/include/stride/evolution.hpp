#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stride/genome.hpp"
#include "stride/rng.hpp"
#include "stride/scoring.hpp"

namespace stride {

struct Individual {
    Genotype genotype;
    double position = 0.0; // real-valued location on the deme strip, [0, deme_count)
    std::optional<double> last_score;
    double rank_score = -std::numeric_limits<double>::infinity(); // score or parent mean
    int age = 0;

    int deme() const { return static_cast<int>(std::floor(position)); }
};

struct DemeConfig {
    int deme_count = kDemeCount;
    int per_deme_capacity = 30;
    int global_capacity = 120;
    std::vector<double> thresholds; // tau_k, size deme_count; tau_0 usually -inf
    double migration_variance = 0.3;
    double invasion_epsilon = 1e-6;
};

// tau_k = rho * w_time * (controlled duration of deme k-1); tau_0 = -inf.
std::vector<double> default_biped_thresholds(double rho, double w_time);

struct EngineConfig {
    DemeConfig demes;
    MutationParams mutation;
    std::uint64_t master_seed = 1;
    int workers = 1;
    bool single_deme = false; // one deme, full-task exposure, no migration
};

struct DemeStats {
    int deme = 0;
    int evaluated = 0;
    double mean_score = 0.0;
    double max_score = 0.0;
    std::uint64_t best_id = 0;
    double threshold = 0.0;
    int after = 0; // occupancy after capacity enforcement
};

struct GenerationRecord {
    long generation = 0;
    std::vector<DemeStats> demes;
    int population_after = 0;
    int max_deme_ever = 0;
    double best_score_ever = -std::numeric_limits<double>::infinity();
};

// Run-long consistency counters; the bookkeeping invariants assert on these.
struct AuditCounters {
    long parent_selections = 0;
    long below_threshold_parents = 0; // stays 0
    long cross_deme_pairs = 0;        // stays 0
    long migration_steps = 0;
    long capacity_violations = 0;     // stays 0
};

// One generation = evaluate everyone, threshold-gated fitness-proportionate
// reproduction inside each deme (offspring replace parents), mutation on
// offspring, random-walk migration with upward invasion gates, then capacity
// allotment from the highest occupied deme downward.
class Engine {
public:
    using EvalCallback =
        std::function<void(long generation, const Individual&, int eval_deme,
                           const EvalOutcome&)>;

    Engine(EngineConfig cfg, const Evaluator& evaluator);

    // deme 0 populated with per_deme_capacity all-zero genotypes
    void initialize();

    void step_generation();

    const std::vector<Individual>& population() const { return population_; }
    long generation() const { return generation_; }
    int max_deme_ever() const { return max_deme_ever_; }
    const GenerationRecord& last_record() const { return last_record_; }
    const AuditCounters& audit() const { return audit_; }
    long evaluations() const { return evaluations_; }
    const EngineConfig& config() const { return cfg_; }

    void set_eval_callback(EvalCallback cb) { eval_callback_ = std::move(cb); }

    // Best-scored individual currently residing in deme k, if any.
    const Individual* best_in_deme(int k) const;

    std::string checkpoint_json(const std::string& config_hash) const;
    // Restores population, generation counter and id counter; the evaluator
    // and config must match the original run for the trajectory to continue
    // identically (the config hash is checked by the caller).
    void restore_checkpoint_json(const std::string& text, std::string* config_hash_out);

    // --- pure pieces, unit-testable -------------------------------------

    // score < tau -> 0; eligible scores map affinely onto [0.01, 1]
    // (all equal -> 1 each). Empty eligible set -> all zeros.
    static std::vector<double> scale_scores(const std::vector<double>& scores, double tau);

    // Random-walk step with reflection at 0 and deme_count; upward integer
    // crossings are gated by the target deme's threshold against the
    // individual's latest score (unscored individuals never cross upward).
    static double apply_migration_step(double position, double step, double score,
                                       const std::vector<double>& thresholds,
                                       int deme_count, double epsilon);

    static void enforce_capacity(std::vector<Individual>& pop, const DemeConfig& cfg);

private:
    void evaluate_population();

    EngineConfig cfg_;
    const Evaluator* evaluator_;
    std::vector<Individual> population_;
    long generation_ = 0;
    std::uint64_t next_id_ = 1;
    int max_deme_ever_ = 0;
    double best_score_ever_ = -std::numeric_limits<double>::infinity();
    long evaluations_ = 0;
    GenerationRecord last_record_;
    AuditCounters audit_;
    EvalCallback eval_callback_;
};

} // namespace stride
