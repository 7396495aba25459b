#include "stride/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "stride/errors.hpp"

namespace stride {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* mode_name(SliceMode m) {
    switch (m) {
        case SliceMode::StepOff: return "step-off";
        case SliceMode::WalkRight: return "walk-right";
        case SliceMode::WalkLeft: return "walk-left";
    }
    return "?";
}

const char* phase_name(TrialPhase p) {
    switch (p) {
        case TrialPhase::Controlled: return "controlled";
        case TrialPhase::Inhibited: return "inhibited";
        case TrialPhase::Balance: return "balance";
    }
    return "?";
}

json acc_json(const MetricAccumulator& a) {
    return {{"e_orient", a.e_orient}, {"e_com", a.e_com},       {"e_joint", a.e_joint},
            {"e_support", a.e_support}, {"t_alive", a.t_alive}, {"fell", a.fell},
            {"settle_failed", a.settle_failed}};
}

} // namespace

Genotype zero_balance_genotype(const RunConfig& c) {
    const PlantContract contract = biped_contract(c.gait.stand_pose());
    const ControllerSchedule sched = build_schedule(c.schedule, contract);
    return make_zero_genotype(sched.balance_shapes(), 0);
}

BipedContext make_biped_context(const RunConfig& c, Genotype balance_genotype) {
    BipedContext ctx;
    ctx.plant = c.biped;
    ctx.com = c.com;
    ctx.gait = c.gait;
    ctx.weights = c.weights;
    ctx.jitter = c.jitter;
    ctx.settle_failure_score = c.settle_failure_score;
    ctx.stand_pose = c.gait.stand_pose();
    ctx.contract = biped_contract(ctx.stand_pose);
    ctx.schedule = build_schedule(c.schedule, ctx.contract);
    validate_genotype(balance_genotype, ctx.schedule.balance_shapes());
    ctx.balance_genotype = std::move(balance_genotype);
    return ctx;
}

BalanceFile load_checked_balance(const RunConfig& c) {
    if (!fs::exists(c.balance_weights_path))
        throw ConfigError("balance weights file not found: " + c.balance_weights_path +
                          " (run `stride pretrain-balance --config <cfg>` first)");
    BalanceFile f = load_balance_file(c.balance_weights_path);
    if (!f.validated && !c.allow_unvalidated_balance)
        throw ConfigError("balance weights file " + c.balance_weights_path +
                          " is marked unvalidated; re-run pretrain-balance or set "
                          "balance.allow_unvalidated");
    return f;
}

std::unique_ptr<Evaluator> make_evaluator(const RunConfig& c,
                                          const Genotype* balance_genotype) {
    if (c.plant == PlantKind::Chain)
        return std::make_unique<ChainEvaluator>(c.chain);
    if (!balance_genotype)
        throw ConfigError("biped evaluator needs a balance genotype");
    return std::make_unique<BipedEvaluator>(make_biped_context(c, *balance_genotype));
}

EngineConfig make_engine_config(const RunConfig& c) {
    EngineConfig ec;
    ec.demes = c.demes;
    ec.single_deme = c.single_deme;
    if (c.single_deme) {
        ec.demes.deme_count = 1;
        ec.demes.global_capacity = ec.demes.per_deme_capacity;
    }
    ec.demes.thresholds = resolve_thresholds(c);
    ec.mutation = c.mutation;
    ec.master_seed = c.master_seed;
    ec.workers = c.workers;
    return ec;
}

RunResult run_evolution(const RunConfig& c, const std::string& resume_checkpoint,
                        bool force_resume, std::ostream* progress) {
    fs::create_directories(c.out_dir);
    const std::string hash = config_hash(c);

    Genotype balance;
    std::string balance_hash;
    if (c.plant == PlantKind::Biped) {
        BalanceFile f = load_checked_balance(c);
        balance = std::move(f.genotype);
        balance_hash = file_hash(c.balance_weights_path);
    }
    auto evaluator = make_evaluator(c, &balance);
    Engine engine(make_engine_config(c), *evaluator);

    const bool resuming = !resume_checkpoint.empty();
    if (resuming) {
        std::ifstream in(resume_checkpoint);
        if (!in) throw ConfigError("cannot open checkpoint: " + resume_checkpoint);
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        std::string ck_hash;
        engine.restore_checkpoint_json(text, &ck_hash);
        if (ck_hash != hash && !force_resume)
            throw ConfigError("checkpoint config hash " + ck_hash +
                              " does not match current config " + hash +
                              " (use --force to resume anyway)");
    } else {
        engine.initialize();
    }

    save_config(c, c.out_dir + "/config.json");

    const std::string csv_path = c.out_dir + "/generations.csv";
    const std::string jsonl_path = c.out_dir + "/generations.jsonl";
    const bool fresh_logs = !resuming || !fs::exists(csv_path);
    std::ofstream csv(csv_path, fresh_logs ? std::ios::trunc : std::ios::app);
    std::ofstream jsonl(jsonl_path, fresh_logs ? std::ios::trunc : std::ios::app);
    if (!csv || !jsonl) throw ConfigError("cannot write logs under " + c.out_dir);
    if (fresh_logs) {
        csv << "generation,deme,evaluated,mean_score,max_score,best_id,threshold,"
               "occupancy_after,population_after,max_deme_ever\n";
    } else {
        csv << "# resume generation=" << engine.generation() << "\n";
        jsonl << json{{"resume", engine.generation()}}.dump() << "\n";
    }

    std::ofstream evals;
    if (c.log_evaluations) {
        evals.open(c.out_dir + "/evals.jsonl", fresh_logs ? std::ios::trunc : std::ios::app);
        engine.set_eval_callback([&evals](long gen, const Individual& ind, int eval_deme,
                                          const EvalOutcome& out) {
            json j{{"gen", gen},
                   {"id", ind.genotype.id},
                   {"deme", eval_deme},
                   {"position", ind.position},
                   {"mean", out.mean},
                   {"scores", out.trial_scores},
                   {"fell", out.fell},
                   {"t_alive", out.t_alive},
                   {"seeds", out.trial_seeds}};
            evals << j.dump() << "\n";
        });
    }

    const int target_deme =
        c.budgets.target_deme < 0 ? evaluator->max_deme() : c.budgets.target_deme;
    const auto t0 = std::chrono::steady_clock::now();
    long first_target_gen = -1;
    std::string stop_reason;

    while (true) {
        if (engine.generation() >= c.budgets.max_generations) {
            stop_reason = "generation budget";
            break;
        }
        if (c.budgets.max_evaluations > 0 &&
            engine.evaluations() >= c.budgets.max_evaluations) {
            stop_reason = "evaluation budget";
            break;
        }
        if (c.budgets.wall_clock_s > 0) {
            const double el =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (el >= c.budgets.wall_clock_s) {
                stop_reason = "wall clock budget";
                break;
            }
        }

        engine.step_generation();
        const GenerationRecord& rec = engine.last_record();

        for (const DemeStats& d : rec.demes) {
            csv << rec.generation << ',' << d.deme << ',' << d.evaluated << ','
                << fmt17(d.mean_score) << ',' << fmt17(d.max_score) << ',' << d.best_id
                << ',' << fmt17(d.threshold) << ',' << d.after << ','
                << rec.population_after << ',' << rec.max_deme_ever << "\n";
        }
        json jd = json::array();
        for (const DemeStats& d : rec.demes)
            jd.push_back({{"deme", d.deme},
                          {"evaluated", d.evaluated},
                          {"mean_score", d.mean_score},
                          {"max_score", d.max_score},
                          {"best_id", d.best_id},
                          {"threshold", std::isinf(d.threshold) ? json() : json(d.threshold)},
                          {"after", d.after}});
        jsonl << json{{"generation", rec.generation},
                      {"demes", jd},
                      {"population", rec.population_after},
                      {"max_deme_ever", rec.max_deme_ever},
                      {"best_score_ever", rec.best_score_ever}}
                     .dump()
              << "\n";

        if (progress && rec.generation % 10 == 0)
            *progress << "gen " << rec.generation << " pop " << rec.population_after
                      << " max_deme " << rec.max_deme_ever << " best "
                      << rec.best_score_ever << "\n";

        if (c.checkpoint_every > 0 && engine.generation() % c.checkpoint_every == 0) {
            std::ofstream ck(c.out_dir + "/checkpoint_g" +
                             std::to_string(engine.generation()) + ".json");
            ck << engine.checkpoint_json(hash) << "\n";
        }

        if (engine.max_deme_ever() >= target_deme) {
            if (first_target_gen < 0) first_target_gen = engine.generation();
            if (engine.generation() - first_target_gen >= c.budgets.stable_generations) {
                stop_reason = "target deme reached";
                break;
            }
        }
    }

    const std::string final_ck = c.out_dir + "/checkpoint_final.json";
    {
        std::ofstream ck(final_ck);
        ck << engine.checkpoint_json(hash) << "\n";
    }
    for (int k = 0; k < engine.config().demes.deme_count; ++k) {
        const Individual* best = engine.best_in_deme(k);
        if (!best) continue;
        save_genotype_with_hash(best->genotype, hash,
                                c.out_dir + "/best_deme" + std::to_string(k) + ".json");
    }
    {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json meta{{"config_hash", hash},
                  {"master_seed", c.master_seed},
                  {"code_version", kCodeVersion},
                  {"balance_file_hash", balance_hash},
                  {"generations", engine.generation()},
                  {"evaluations", engine.evaluations()},
                  {"max_deme_ever", engine.max_deme_ever()},
                  {"stop_reason", stop_reason},
                  {"wall_seconds", wall}};
        std::ofstream meta_out(c.out_dir + "/run_meta.json");
        meta_out << meta.dump(2) << "\n";
    }

    RunResult r;
    r.generations = engine.generation();
    r.evaluations = engine.evaluations();
    r.max_deme_ever = engine.max_deme_ever();
    r.best_score_ever = engine.last_record().best_score_ever;
    r.stop_reason = stop_reason;
    r.checkpoint_path = final_ck;
    r.audit = engine.audit();
    return r;
}

namespace {

class JsonlSink final : public TrialSink {
public:
    explicit JsonlSink(std::ostream& out) : out_(out) {}
    void on_tick(const TickRecord& rec, const ITrialPlant& plant) override {
        json blend = json::array();
        for (int i = 0; i < rec.debug.blend.count; ++i) {
            const BlendEntry& e = rec.debug.blend.entry[i];
            blend.push_back({{"net", e.net},
                             {"mode", e.net < 0 ? "balance" : mode_name(e.mode)},
                             {"weight", e.weight}});
        }
        json links = json::array();
        for (const LinkPose& lp : plant.link_poses())
            links.push_back({lp.x, lp.z, lp.angle});
        json j{{"tick", rec.tick},
               {"t", rec.t},
               {"phase", phase_name(rec.phase)},
               {"commands", rec.commands},
               {"suggested", rec.suggested},
               {"sensors", rec.sensors.values},
               {"links", links},
               {"blend", blend},
               {"acc", acc_json(rec.acc)}};
        out_ << j.dump() << "\n";
    }

private:
    std::ostream& out_;
};

} // namespace

void replay_trial(const RunConfig& c, const Genotype& g, int deme, std::uint64_t seed,
                  std::ostream& out) {
    if (c.plant != PlantKind::Biped)
        throw ConfigError("replay requires the biped plant");
    BalanceFile f = load_checked_balance(c);
    const BipedContext ctx = make_biped_context(c, std::move(f.genotype));
    out << json{{"format", "stride-replay"},
                {"config_hash", config_hash(c)},
                {"code_version", kCodeVersion},
                {"seed", seed},
                {"deme", deme},
                {"genotype_id", g.id}}
               .dump()
        << "\n";
    JsonlSink sink(out);
    const MetricAccumulator acc = run_trial(ctx, g, deme, seed, &sink);
    json tail{{"result", acc_json(acc)},
              {"score", finalize(acc, ctx.weights, ctx.settle_failure_score)}};
    out << tail.dump() << "\n";
}

EvalOutcome eval_genotype(const RunConfig& c, const Genotype& g, int deme,
                          std::uint64_t base_seed, int trials) {
    if (c.plant == PlantKind::Chain) {
        const ChainEvaluator ev(c.chain);
        return ev.evaluate(g, deme, base_seed);
    }
    BalanceFile f = load_checked_balance(c);
    const BipedContext ctx = make_biped_context(c, std::move(f.genotype));
    const BipedEvaluator ev(ctx);
    if (trials == kTrialsPerEvaluation) return ev.evaluate(g, deme, base_seed);

    EvalOutcome out; // debugging subset, same seed derivation
    double sum = 0.0;
    for (int i = 0; i < trials && i < kTrialsPerEvaluation; ++i) {
        const std::uint64_t s = trial_seed(base_seed, i);
        const MetricAccumulator acc = run_trial(ctx, g, deme, s);
        out.trial_seeds[i] = s;
        out.trial_scores[i] = finalize(acc, ctx.weights, ctx.settle_failure_score);
        out.fell[i] = acc.fell;
        out.t_alive[i] = acc.t_alive;
        sum += out.trial_scores[i];
    }
    out.mean = sum / std::max(1, trials);
    return out;
}

void dump_trajectories_csv(const RunConfig& c, std::ostream& out, double dt) {
    out << "t,com_x,com_v,envelope";
    const char* names[kJointCount] = {"hipL", "kneeL", "ankleL", "hipR", "kneeR", "ankleR"};
    for (const char* n : names) out << ",sugg_" << n;
    out << "\n";
    const int n = static_cast<int>(std::lround(c.com.duration() / dt));
    for (int i = 0; i <= n; ++i) {
        const double t = i * dt;
        const ComPoint cp = suggested_com(t, c.com);
        const auto js = suggested_joints(t, c.com, c.gait);
        out << fmt17(t) << ',' << fmt17(cp.x) << ',' << fmt17(cp.v) << ','
            << fmt17(envelope(t, c.com));
        for (double v : js) out << ',' << fmt17(v);
        out << "\n";
    }
}

void save_genotype_with_hash(const Genotype& g, const std::string& cfg_hash,
                             const std::string& path) {
    json j = json::parse(genotype_to_json(g));
    j["config_hash"] = cfg_hash;
    std::ofstream out(path);
    if (!out) throw StructuralError("cannot write genotype file: " + path);
    out << j.dump(2) << "\n";
}

} // namespace stride
