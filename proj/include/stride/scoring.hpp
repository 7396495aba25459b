#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "stride/genome.hpp"
#include "stride/neural.hpp"
#include "stride/plant.hpp"
#include "stride/trajectory.hpp"

namespace stride {

inline constexpr int kDemeCount = 19;
inline constexpr int kTrialsPerEvaluation = 5;

// Per-deme test timeline. Demes 0..15 extend the controlled window by 0.2 s
// each and append a 0.6 s inhibited window; deme 15 covers the whole walk and
// demes 15..18 hand over to the balance network for 0.6 s per deme step.
struct DemeTimeline {
    int deme = 0;
    double controlled = 0.0;
    double inhibited = 0.0;
    double balance = 0.0;
    int last_controlled_slice = 0; // schedule truncation point
    bool balance_follows = false;

    double total() const { return controlled + inhibited + balance; }
};

DemeTimeline timeline_for(int k);

struct ScoreWeights {
    double time = 10.0;   // per second, positive
    double orient = 2.0;  // pitch^2 per tick
    double com = 5.0;     // m^2 per tick
    double joint = 0.2;   // rad^2 per tick, lightly weighted
    double support = 1.0; // m^2 per tick
};

struct MetricAccumulator {
    double e_orient = 0.0;
    double e_com = 0.0;
    double e_joint = 0.0;
    double e_support = 0.0;
    double t_alive = 0.0;
    bool fell = false;
    bool settle_failed = false;
};

double finalize(const MetricAccumulator& m, const ScoreWeights& w,
                double settle_failure_score);

// ---------------------------------------------------------------------------
// Trial plant abstraction: the scoring loop only needs tick stepping and a
// few probes, which keeps it testable against a kinematic stand-in.
// ---------------------------------------------------------------------------

class ITrialPlant {
public:
    virtual ~ITrialPlant() = default;
    virtual SensorFrame step(const std::array<double, kEffectorCount>& commands) = 0;
    virtual SensorFrame sensors() const = 0;
    virtual bool has_fallen() const = 0;
    virtual ComSupport com_and_support() const = 0;
    virtual std::array<LinkPose, 7> link_poses() const { return {}; }
};

class BipedTrialPlant final : public ITrialPlant {
public:
    explicit BipedTrialPlant(const BipedParams& p) : biped_(p) {}
    SensorFrame step(const std::array<double, kEffectorCount>& commands) override {
        return biped_.step(commands);
    }
    SensorFrame sensors() const override { return biped_.sensors(); }
    bool has_fallen() const override { return biped_.has_fallen(); }
    ComSupport com_and_support() const override { return biped_.com_and_support(); }
    std::array<LinkPose, 7> link_poses() const override { return biped_.link_poses(); }
    PlanarBiped& biped() { return biped_; }

private:
    PlanarBiped biped_;
};

// Replay hook: called once per tick of the walk window.
struct TickRecord {
    int tick = 0;
    double t = 0.0;
    TrialPhase phase = TrialPhase::Controlled;
    std::array<double, kEffectorCount> commands{};
    std::array<double, kEffectorCount> suggested{};
    SensorFrame sensors;
    ControlDebug debug;
    MetricAccumulator acc;
};

class TrialSink {
public:
    virtual ~TrialSink() = default;
    virtual void on_tick(const TickRecord& rec, const ITrialPlant& plant) = 0;
};

// Everything a biped trial needs, built once per run and shared read-only
// across workers.
struct BipedContext {
    BipedParams plant;
    PlantContract contract;
    ControllerSchedule schedule;
    ComProfile com;
    GaitParams gait;
    ScoreWeights weights;
    JitterSpec jitter;
    double settle_failure_score = -100.0;
    std::array<double, kEffectorCount> stand_pose{};
    Genotype balance_genotype; // single balance chromosome

    Network balance_network() const {
        return Network(schedule.balance, balance_genotype.chromosomes.at(0).weights);
    }
};

// The scored walk window (controlled + inhibited/balance extension) on an
// already-settled plant. Error metrics accumulate on controlled ticks only;
// t_alive runs to the end of the test or the fall.
MetricAccumulator walk_and_score(ITrialPlant& plant, const BipedContext& ctx,
                                 const Genotype& genotype, const DemeTimeline& tl,
                                 TrialSink* sink = nullptr);

// Full trial: stance jitter, 2 s settle under the balance network with one
// random impulse, then the walk window. Draw order from the trial seed:
// stance offset, impulse direction, impulse magnitude, impulse time.
MetricAccumulator run_trial(const BipedContext& ctx, const Genotype& genotype, int deme_k,
                            std::uint64_t seed, TrialSink* sink = nullptr);

// ---------------------------------------------------------------------------
// Evaluation: five trials with seeds derived from (base_seed, trial index),
// arithmetic mean of the finalized scores.
// ---------------------------------------------------------------------------

struct EvalOutcome {
    double mean = 0.0;
    std::array<double, kTrialsPerEvaluation> trial_scores{};
    std::array<bool, kTrialsPerEvaluation> fell{};
    std::array<double, kTrialsPerEvaluation> t_alive{};
    std::array<std::uint64_t, kTrialsPerEvaluation> trial_seeds{};
};

std::uint64_t trial_seed(std::uint64_t base_seed, int trial_index);

class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual EvalOutcome evaluate(const Genotype& g, int deme, std::uint64_t base_seed) const = 0;
    virtual std::vector<ChromosomeShape> genotype_shapes() const = 0;
    virtual int max_deme() const { return kDemeCount - 1; }
};

class BipedEvaluator final : public Evaluator {
public:
    explicit BipedEvaluator(BipedContext ctx) : ctx_(std::move(ctx)) {}
    EvalOutcome evaluate(const Genotype& g, int deme, std::uint64_t base_seed) const override;
    std::vector<ChromosomeShape> genotype_shapes() const override {
        return ctx_.schedule.genotype_shapes();
    }
    const BipedContext& context() const { return ctx_; }

private:
    BipedContext ctx_;
};

class ChainEvaluator final : public Evaluator {
public:
    explicit ChainEvaluator(ChainTaskParams p) : params_(p) {}
    EvalOutcome evaluate(const Genotype& g, int deme, std::uint64_t base_seed) const override;
    std::vector<ChromosomeShape> genotype_shapes() const override {
        return chain_shapes(params_);
    }
    int max_deme() const override { return params_.gene_count - 1; }
    const ChainTaskParams& params() const { return params_; }

private:
    ChainTaskParams params_;
};

// ---------------------------------------------------------------------------
// Standing-balance task used for pre-evolving the balance network: stand for
// `duration` seconds under one random impulse; score rewards time upright and
// penalizes pitch and support error.
// ---------------------------------------------------------------------------

struct BalanceTaskParams {
    double duration = 10.0;
    JitterSpec jitter{0.5, 3.0, 0.03, 0.0, 1.0, 8.0}; // impulse inside the window
};

MetricAccumulator run_balance_trial(const BipedContext& ctx, const BalanceTaskParams& task,
                                    const Genotype& balance_genotype, std::uint64_t seed);

class BalanceEvaluator final : public Evaluator {
public:
    BalanceEvaluator(BipedContext ctx, BalanceTaskParams task)
        : ctx_(std::move(ctx)), task_(task) {}
    EvalOutcome evaluate(const Genotype& g, int deme, std::uint64_t base_seed) const override;
    std::vector<ChromosomeShape> genotype_shapes() const override {
        return ctx_.schedule.balance_shapes();
    }
    int max_deme() const override { return 0; }
    const BipedContext& context() const { return ctx_; }
    const BalanceTaskParams& task() const { return task_; }

private:
    BipedContext ctx_;
    BalanceTaskParams task_;
};

} // namespace stride
