#include "stride/scoring.hpp"

#include <cmath>

#include "stride/errors.hpp"

namespace stride {

namespace {
// seed-derivation tags (see rng.hpp)
constexpr std::uint64_t kTagTrial = 0x741A1;
constexpr std::uint64_t kTagReset = 0x4E5E7;
} // namespace

DemeTimeline timeline_for(int k) {
    if (k < 0 || k >= kDemeCount)
        throw ConfigError("deme index out of range: " + std::to_string(k));
    DemeTimeline tl;
    tl.deme = k;
    const int walk_k = std::min(k, 15);
    tl.controlled = 0.4 + 0.2 * walk_k;
    tl.inhibited = k < 15 ? 0.6 : 0.0;
    tl.balance = k >= 15 ? 0.6 * (k - 14) : 0.0;
    tl.last_controlled_slice = static_cast<int>(std::lround(tl.controlled / 0.1)) - 1;
    tl.balance_follows = k >= 15;
    return tl;
}

double finalize(const MetricAccumulator& m, const ScoreWeights& w,
                double settle_failure_score) {
    if (m.settle_failed) return settle_failure_score;
    return w.time * m.t_alive - w.orient * m.e_orient - w.com * m.e_com -
           w.joint * m.e_joint - w.support * m.e_support;
}

MetricAccumulator walk_and_score(ITrialPlant& plant, const BipedContext& ctx,
                                 const Genotype& genotype, const DemeTimeline& tl,
                                 TrialSink* sink) {
    const double dt = ctx.schedule.tick_duration;
    const int total_ticks = static_cast<int>(std::lround(tl.total() / dt));
    const int ctl_ticks = static_cast<int>(std::lround(tl.controlled / dt));
    const Network balance_net = ctx.balance_network();
    const double com_x0 = plant.com_and_support().com_x;

    MetricAccumulator acc;
    for (int tick = 0; tick < total_ticks; ++tick) {
        const double t = tick * dt;
        const TrialPhase phase = tick < ctl_ticks
                                     ? TrialPhase::Controlled
                                     : (tl.balance_follows ? TrialPhase::Balance
                                                           : TrialPhase::Inhibited);
        const auto suggested = suggested_joints(t, ctx.com, ctx.gait);
        const SensorFrame seen = plant.sensors();
        ControlDebug dbg;
        const auto cmd =
            control_tick(ctx.schedule, genotype, balance_net, tick, phase,
                         tl.last_controlled_slice, tl.balance_follows, seen, suggested,
                         ctx.stand_pose, ctx.contract, sink ? &dbg : nullptr);

        SensorFrame frame;
        try {
            frame = plant.step(cmd);
        } catch (const BlowupError&) {
            acc.fell = true;
            break; // scored as a fall at the current time
        }

        const double t_next = (tick + 1) * dt;
        if (tick < ctl_ticks) {
            const auto cs = plant.com_and_support();
            const double pitch = frame[ChPitch];
            const double com_err = cs.com_x - com_x0 - suggested_com(t_next, ctx.com).x;
            const double support_err = cs.com_x - cs.midfeet_x;
            const auto target = suggested_joints(t_next, ctx.com, ctx.gait);
            double joint_err = 0.0;
            for (int j = 0; j < kEffectorCount; ++j) {
                const double d = frame[ChJoint0 + j] - target[j];
                joint_err += d * d;
            }
            acc.e_orient += pitch * pitch;
            acc.e_com += com_err * com_err;
            acc.e_joint += joint_err;
            acc.e_support += support_err * support_err;
        }
        acc.t_alive = t_next;

        if (sink) {
            TickRecord rec;
            rec.tick = tick;
            rec.t = t;
            rec.phase = phase;
            rec.commands = cmd;
            rec.suggested = suggested;
            rec.sensors = seen;
            rec.debug = dbg;
            rec.acc = acc;
            sink->on_tick(rec, plant);
        }
        if (plant.has_fallen()) {
            acc.fell = true;
            break;
        }
    }
    return acc;
}

namespace {

struct ResetDraws {
    double stance = 0.0;
    bool do_impulse = false;
    double impulse = 0.0; // signed, N.s
    double impulse_time = -1.0;
};

ResetDraws draw_reset(const JitterSpec& jitter, std::uint64_t seed) {
    ResetDraws d;
    Rng rng(derive_seed(seed, kTagReset));
    if (jitter.stance_halfwidth > 0.0)
        d.stance = rng.uniform(-jitter.stance_halfwidth, jitter.stance_halfwidth);
    if (jitter.impulse_max > 0.0) {
        d.do_impulse = true;
        const double dir = rng.coin() ? 1.0 : -1.0;
        const double mag = rng.uniform(jitter.impulse_min, jitter.impulse_max);
        d.impulse = dir * mag;
        d.impulse_time = rng.uniform(jitter.impulse_time_min, jitter.impulse_time_max);
    }
    return d;
}

// Settle under the balance network; returns false if the robot falls.
bool settle(PlanarBiped& biped, const BipedContext& ctx, const Network& balance_net,
            const ResetDraws& draws) {
    const double dt = ctx.schedule.tick_duration;
    const int ticks = static_cast<int>(std::lround(ctx.jitter.settle_duration / dt));
    const int imp_tick =
        draws.do_impulse ? static_cast<int>(std::floor(draws.impulse_time / dt)) : -1;
    for (int i = 0; i < ticks; ++i) {
        if (i == imp_tick) biped.apply_impulse_x(draws.impulse);
        const SensorFrame f = biped.sensors();
        const auto dev = balance_net.forward(f, ctx.contract);
        std::array<double, kEffectorCount> cmd;
        for (int j = 0; j < kEffectorCount; ++j) cmd[j] = ctx.stand_pose[j] + dev[j];
        try {
            biped.step(cmd);
        } catch (const BlowupError&) {
            return false;
        }
        if (biped.has_fallen()) return false;
    }
    return true;
}

} // namespace

MetricAccumulator run_trial(const BipedContext& ctx, const Genotype& genotype, int deme_k,
                            std::uint64_t seed, TrialSink* sink) {
    validate_genotype(genotype, ctx.schedule.genotype_shapes());
    const DemeTimeline tl = timeline_for(deme_k);
    const Network balance_net = ctx.balance_network();
    const ResetDraws draws = draw_reset(ctx.jitter, seed);

    BipedTrialPlant plant(ctx.plant);
    plant.biped().place_standing(ctx.stand_pose, draws.stance);
    if (!settle(plant.biped(), ctx, balance_net, draws)) {
        MetricAccumulator acc;
        acc.settle_failed = true;
        acc.fell = true;
        return acc;
    }
    return walk_and_score(plant, ctx, genotype, tl, sink);
}

std::uint64_t trial_seed(std::uint64_t base_seed, int trial_index) {
    return derive_seed(base_seed, kTagTrial, static_cast<std::uint64_t>(trial_index));
}

EvalOutcome BipedEvaluator::evaluate(const Genotype& g, int deme,
                                     std::uint64_t base_seed) const {
    EvalOutcome out;
    double sum = 0.0;
    for (int i = 0; i < kTrialsPerEvaluation; ++i) {
        const std::uint64_t s = trial_seed(base_seed, i);
        const MetricAccumulator acc = run_trial(ctx_, g, deme, s);
        const double score = finalize(acc, ctx_.weights, ctx_.settle_failure_score);
        out.trial_seeds[i] = s;
        out.trial_scores[i] = score;
        out.fell[i] = acc.fell;
        out.t_alive[i] = acc.t_alive;
        sum += score;
    }
    out.mean = sum / kTrialsPerEvaluation;
    return out;
}

EvalOutcome ChainEvaluator::evaluate(const Genotype& g, int deme,
                                     std::uint64_t base_seed) const {
    const double score = chain_score(g, deme, params_);
    EvalOutcome out;
    out.mean = score;
    for (int i = 0; i < kTrialsPerEvaluation; ++i) {
        out.trial_seeds[i] = trial_seed(base_seed, i); // recorded, unused: no physics
        out.trial_scores[i] = score;
        out.fell[i] = false;
        out.t_alive[i] = 0.0;
    }
    return out;
}

MetricAccumulator run_balance_trial(const BipedContext& ctx, const BalanceTaskParams& task,
                                    const Genotype& balance_genotype, std::uint64_t seed) {
    validate_genotype(balance_genotype, ctx.schedule.balance_shapes());
    const Network net(ctx.schedule.balance, balance_genotype.chromosomes[0].weights);
    const ResetDraws draws = draw_reset(task.jitter, seed);

    PlanarBiped biped(ctx.plant);
    biped.place_standing(ctx.stand_pose, draws.stance);

    const double dt = ctx.schedule.tick_duration;
    const int ticks = static_cast<int>(std::lround(task.duration / dt));
    const int imp_tick =
        draws.do_impulse ? static_cast<int>(std::floor(draws.impulse_time / dt)) : -1;

    MetricAccumulator acc;
    for (int i = 0; i < ticks; ++i) {
        if (i == imp_tick) biped.apply_impulse_x(draws.impulse);
        const SensorFrame f = biped.sensors();
        const auto dev = net.forward(f, ctx.contract);
        std::array<double, kEffectorCount> cmd;
        for (int j = 0; j < kEffectorCount; ++j) cmd[j] = ctx.stand_pose[j] + dev[j];
        SensorFrame frame;
        try {
            frame = biped.step(cmd);
        } catch (const BlowupError&) {
            acc.fell = true;
            break;
        }
        const auto cs = biped.com_and_support();
        acc.e_orient += frame[ChPitch] * frame[ChPitch];
        const double support_err = cs.com_x - cs.midfeet_x;
        acc.e_support += support_err * support_err;
        acc.t_alive = (i + 1) * dt;
        if (biped.has_fallen()) {
            acc.fell = true;
            break;
        }
    }
    return acc;
}

EvalOutcome BalanceEvaluator::evaluate(const Genotype& g, int /*deme*/,
                                       std::uint64_t base_seed) const {
    EvalOutcome out;
    double sum = 0.0;
    for (int i = 0; i < kTrialsPerEvaluation; ++i) {
        const std::uint64_t s = trial_seed(base_seed, i);
        const MetricAccumulator acc = run_balance_trial(ctx_, task_, g, s);
        const double score = finalize(acc, ctx_.weights, ctx_.settle_failure_score);
        out.trial_seeds[i] = s;
        out.trial_scores[i] = score;
        out.fell[i] = acc.fell;
        out.t_alive[i] = acc.t_alive;
        sum += score;
    }
    out.mean = sum / kTrialsPerEvaluation;
    return out;
}

} // namespace stride
