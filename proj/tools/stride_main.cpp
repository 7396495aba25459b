#include <cstdint>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "stride/balance.hpp"
#include "stride/config.hpp"
#include "stride/errors.hpp"
#include "stride/runner.hpp"

namespace {

using namespace stride;

RunConfig load_with_overrides(const std::string& config_path, const CLI::App* cmd) {
    RunConfig c = load_config(config_path);
    if (cmd->count("--seed")) c.master_seed = cmd->get_option("--seed")->as<std::uint64_t>();
    if (cmd->count("--workers")) c.workers = cmd->get_option("--workers")->as<int>();
    if (cmd->count("--out")) c.out_dir = cmd->get_option("--out")->as<std::string>();
    if (cmd->count("--single-deme")) c.single_deme = true;
    if (cmd->count("--plant")) {
        const std::string p = cmd->get_option("--plant")->as<std::string>();
        c.plant = p == "chain" ? PlantKind::Chain : PlantKind::Biped;
    }
    return c;
}

int cmd_evolve(const std::string& config_path, const CLI::App* cmd) {
    RunConfig c = load_with_overrides(config_path, cmd);
    const std::string resume = cmd->count("--resume")
                                   ? cmd->get_option("--resume")->as<std::string>()
                                   : std::string{};
    const bool force = cmd->count("--force") > 0;
    const RunResult r = run_evolution(c, resume, force, &std::cerr);
    std::cout << "generations=" << r.generations << " evaluations=" << r.evaluations
              << " max_deme=" << r.max_deme_ever << " best=" << r.best_score_ever
              << " stop=\"" << r.stop_reason << "\"\n"
              << "checkpoint: " << r.checkpoint_path << "\n";
    return 0;
}

int cmd_pretrain(const std::string& config_path, const CLI::App* cmd) {
    RunConfig c = load_with_overrides(config_path, cmd);
    std::string out_path = c.balance_weights_path;
    if (cmd->count("--out")) out_path = cmd->get_option("--out")->as<std::string>();
    c.balance.workers = c.workers;

    const BipedContext ctx = make_biped_context(c, zero_balance_genotype(c));
    const BalancePretrainResult result = pretrain_balance(
        ctx, c.balance, c.master_seed, [](long gen, double best) {
            std::cerr << "pretrain gen " << gen << " best " << best << "\n";
        });

    BalanceFile f;
    f.genotype = result.best;
    f.validated = result.validated;
    f.config_hash = config_hash(c);
    f.score = result.best_score;
    save_balance_file(f, out_path);
    std::cout << "balance weights -> " << out_path << " validated=" << result.validated
              << " passes=" << result.validation_passes << "/"
              << c.balance.validation_trials << " generations=" << result.generations
              << "\n";
    if (!result.validated)
        std::cerr << "warning: balance network did not meet the validation criterion; "
                     "file is marked unvalidated\n";
    return 0;
}

int cmd_replay(const std::string& config_path, const CLI::App* cmd) {
    const RunConfig c = load_with_overrides(config_path, cmd);
    const std::string gpath = cmd->get_option("--genotype")->as<std::string>();
    const int deme = cmd->get_option("--deme")->as<int>();
    const std::uint64_t seed = cmd->get_option("--trial-seed")->as<std::uint64_t>();
    const Genotype g = load_genotype(gpath);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (cmd->count("--replay-out")) {
        file.open(cmd->get_option("--replay-out")->as<std::string>());
        if (!file) throw ConfigError("cannot open replay output file");
        out = &file;
    }
    replay_trial(c, g, deme, seed, *out);
    return 0;
}

int cmd_eval(const std::string& config_path, const CLI::App* cmd) {
    const RunConfig c = load_with_overrides(config_path, cmd);
    const std::string gpath = cmd->get_option("--genotype")->as<std::string>();
    const int deme = cmd->get_option("--deme")->as<int>();
    const std::uint64_t seed = cmd->get_option("--base-seed")->as<std::uint64_t>();
    const int trials = cmd->get_option("--trials")->as<int>();
    const Genotype g = load_genotype(gpath);
    const EvalOutcome out = eval_genotype(c, g, deme, seed, trials);
    for (int i = 0; i < trials && i < kTrialsPerEvaluation; ++i)
        std::cout << out.trial_scores[i] << ",";
    std::cout << out.mean << "\n";
    return 0;
}

int cmd_dump(const std::string& config_path, const CLI::App* cmd) {
    const RunConfig c = load_with_overrides(config_path, cmd);
    const double dt = cmd->get_option("--dt")->as<double>();
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (cmd->count("--csv-out")) {
        file.open(cmd->get_option("--csv-out")->as<std::string>());
        if (!file) throw ConfigError("cannot open trajectory output file");
        out = &file;
    }
    dump_trajectories_csv(c, *out, dt);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stride: multi-deme progressive-fitness evolution of segmented "
                 "neural walking controllers"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0, trial_seed_arg = 0;
    int workers = 0, deme = 0, trials = 5;
    double dt = 0.01;
    std::string out_dir, resume, genotype_path, plant, replay_out, csv_out;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config file (JSON)")->required();
        cmd->add_option("--seed", seed, "master seed override");
        cmd->add_option("--workers", workers, "worker thread count override");
        cmd->add_option("--out", out_dir, "output directory/file override");
        cmd->add_flag("--single-deme", "single-deme baseline on the full task");
        cmd->add_option("--plant", plant, "plant override")
            ->check(CLI::IsMember({"biped", "chain"}));
    };

    CLI::App* evolve = app.add_subcommand("evolve", "run the evolution experiment");
    add_common(evolve);
    evolve->add_option("--resume", resume, "resume from a checkpoint file");
    evolve->add_flag("--force", "resume even if the config hash differs");

    CLI::App* pretrain =
        app.add_subcommand("pretrain-balance", "pre-evolve the standing balance network");
    add_common(pretrain);

    CLI::App* replay = app.add_subcommand("replay", "replay one trial as JSONL");
    add_common(replay);
    replay->add_option("--genotype", genotype_path, "genotype file")->required();
    replay->add_option("--deme", deme, "deme index (test timeline)")->required();
    replay->add_option("--trial-seed", trial_seed_arg, "trial seed")->required();
    replay->add_option("--replay-out", replay_out, "output file (default stdout)");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a genotype (five-trial mean)");
    add_common(eval);
    eval->add_option("--genotype", genotype_path, "genotype file")->required();
    eval->add_option("--deme", deme, "deme index")->required();
    eval->add_option("--base-seed", trial_seed_arg, "evaluation base seed")->required();
    eval->add_option("--trials", trials, "trial count (default 5)");

    CLI::App* dump =
        app.add_subcommand("dump-trajectories", "dump suggested trajectories as CSV");
    add_common(dump);
    dump->add_option("--dt", dt, "sample step (s)");
    dump->add_option("--csv-out", csv_out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (evolve->parsed()) return cmd_evolve(config_path, evolve);
        if (pretrain->parsed()) return cmd_pretrain(config_path, pretrain);
        if (replay->parsed()) return cmd_replay(config_path, replay);
        if (eval->parsed()) return cmd_eval(config_path, eval);
        if (dump->parsed()) return cmd_dump(config_path, dump);
    } catch (const stride::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const stride::StructuralError& e) {
        std::cerr << "structural error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
