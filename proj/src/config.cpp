#include "stride/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stride/errors.hpp"

namespace stride {

namespace {

using nlohmann::json;

// Strict section reader: every key must be consumed, so typos fail loudly.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw ConfigError("config section '" + path_ + "' must be an object");
    }

    template <typename T>
    T get(const char* key, T fallback) {
        if (!j_.contains(key)) return fallback;
        seen_.insert(key);
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config key '" + path_ + "." + key + "': " + e.what());
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    const json* sub(const char* key) {
        if (!j_.contains(key)) return nullptr;
        seen_.insert(key);
        return &j_.at(key);
    }

    void done() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key()))
                throw ConfigError("unknown config key '" + path_ + "." + item.key() + "'");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json thresholds_to_json(const std::vector<double>& tau) {
    json arr = json::array();
    for (double t : tau) {
        if (std::isinf(t) && t < 0)
            arr.push_back(nullptr); // -inf is not representable in JSON
        else
            arr.push_back(t);
    }
    return arr;
}

std::vector<double> thresholds_from_json(const json& arr, const std::string& path) {
    if (!arr.is_array()) throw ConfigError(path + " must be an array");
    std::vector<double> tau;
    for (const auto& v : arr) {
        if (v.is_null())
            tau.push_back(-std::numeric_limits<double>::infinity());
        else
            tau.push_back(v.get<double>());
    }
    return tau;
}

} // namespace

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(bytes)));
    return buf;
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StructuralError("cannot hash missing file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return fnv1a_hex(buf.str());
}

std::vector<double> resolve_thresholds(const RunConfig& c) {
    const int demes = c.single_deme ? 1 : c.demes.deme_count;
    if (!c.demes.thresholds.empty()) {
        if (static_cast<int>(c.demes.thresholds.size()) != demes)
            throw ConfigError("thresholds array size " +
                              std::to_string(c.demes.thresholds.size()) +
                              " does not match deme count " + std::to_string(demes));
        return c.demes.thresholds;
    }
    if (demes == 1) return {-std::numeric_limits<double>::infinity()};
    std::vector<double> tau(demes);
    tau[0] = -std::numeric_limits<double>::infinity();
    if (c.plant == PlantKind::Biped) {
        for (int k = 1; k < demes; ++k)
            tau[k] = c.threshold_rho * c.weights.time * timeline_for(k - 1).controlled;
    } else {
        for (int k = 1; k < demes; ++k)
            tau[k] = k * c.chain.narrow_height - c.chain_threshold_slack;
    }
    return tau;
}

std::string config_to_json(const RunConfig& c, int indent) {
    json j;
    j["plant"]["type"] = c.plant == PlantKind::Biped ? "biped" : "chain";
    {
        const BipedParams& b = c.biped;
        j["plant"]["biped"] = {
            {"torso_mass", b.torso_mass},       {"torso_length", b.torso_length},
            {"thigh_mass", b.thigh_mass},       {"thigh_length", b.thigh_length},
            {"shank_mass", b.shank_mass},       {"shank_length", b.shank_length},
            {"foot_mass", b.foot_mass},         {"foot_length", b.foot_length},
            {"foot_height", b.foot_height},     {"hip_kp", b.hip_kp},
            {"hip_kd", b.hip_kd},               {"hip_tau_max", b.hip_tau_max},
            {"knee_kp", b.knee_kp},             {"knee_kd", b.knee_kd},
            {"knee_tau_max", b.knee_tau_max},   {"ankle_kp", b.ankle_kp},
            {"ankle_kd", b.ankle_kd},           {"ankle_tau_max", b.ankle_tau_max},
            {"contact_kn", b.contact_kn},       {"contact_cn", b.contact_cn},
            {"friction_mu", b.friction_mu},     {"slip_velocity", b.slip_velocity},
            {"gravity", b.gravity},             {"substep_dt", b.substep_dt},
            {"substeps_per_tick", b.substeps_per_tick},
            {"fall_pitch", b.fall_pitch},
            {"fall_hip_height_frac", b.fall_hip_height_frac},
        };
    }
    j["plant"]["chain"] = {
        {"chromosome_length", c.chain.chromosome_length},
        {"gene_count", c.chain.gene_count},
        {"wide_center", c.chain.wide_center},
        {"wide_sigma", c.chain.wide_sigma},
        {"wide_height", c.chain.wide_height},
        {"narrow_center", c.chain.narrow_center},
        {"narrow_sigma", c.chain.narrow_sigma},
        {"narrow_height", c.chain.narrow_height},
    };
    j["schedule"] = {
        {"step_off_count", c.schedule.step_off_count},
        {"accel_count", c.schedule.accel_count},
        {"middle_count", c.schedule.middle_count},
        {"middle_reuse", c.schedule.middle_reuse},
        {"decel_count", c.schedule.decel_count},
        {"slice_duration", c.schedule.slice_duration},
        {"tick_duration", c.schedule.tick_duration},
        {"crossfade_duration", c.schedule.crossfade_duration},
        {"step_off_hidden", c.schedule.step_off_hidden},
        {"walk_hidden", c.schedule.walk_hidden},
        {"balance_hidden", c.schedule.balance_hidden},
        {"output_gain", c.schedule.output_gain},
    };
    j["trajectory"]["com"] = {
        {"t_accel", c.com.t_accel},
        {"t_coast", c.com.t_coast},
        {"t_decel", c.com.t_decel},
        {"total_distance", c.com.total_distance},
    };
    j["trajectory"]["gait"]["step_period"] = c.gait.step_period;
    {
        json arr = json::array();
        for (const auto& w : c.gait.joints)
            arr.push_back({{"offset", w.offset},
                           {"amplitude", w.amplitude},
                           {"phase", w.phase}});
        j["trajectory"]["gait"]["joints"] = arr;
    }
    j["score_weights"] = {
        {"time", c.weights.time},       {"orient", c.weights.orient},
        {"com", c.weights.com},         {"joint", c.weights.joint},
        {"support", c.weights.support},
    };
    j["jitter"] = {
        {"impulse_min", c.jitter.impulse_min},
        {"impulse_max", c.jitter.impulse_max},
        {"stance_halfwidth", c.jitter.stance_halfwidth},
        {"settle_duration", c.jitter.settle_duration},
        {"impulse_time_min", c.jitter.impulse_time_min},
        {"impulse_time_max", c.jitter.impulse_time_max},
    };
    j["demes"] = {
        {"deme_count", c.demes.deme_count},
        {"per_deme_capacity", c.demes.per_deme_capacity},
        {"global_capacity", c.demes.global_capacity},
        {"thresholds", thresholds_to_json(resolve_thresholds(c))},
        {"threshold_rho", c.threshold_rho},
        {"chain_threshold_slack", c.chain_threshold_slack},
        {"migration_variance", c.demes.migration_variance},
        {"invasion_epsilon", c.demes.invasion_epsilon},
    };
    j["mutation"] = {
        {"per_chromosome_rate", c.mutation.per_chromosome_rate},
        {"r_low", c.mutation.r_low},
        {"r_high", c.mutation.r_high},
        {"sign_flip_prob", c.mutation.sign_flip_prob},
        {"zero_reseed_halfwidth", c.mutation.zero_reseed_halfwidth},
    };
    j["balance"] = {
        {"weights_path", c.balance_weights_path},
        {"allow_unvalidated", c.allow_unvalidated_balance},
        {"pretrain",
         {
             {"duration", c.balance.task.duration},
             {"impulse_min", c.balance.task.jitter.impulse_min},
             {"impulse_max", c.balance.task.jitter.impulse_max},
             {"stance_halfwidth", c.balance.task.jitter.stance_halfwidth},
             {"impulse_time_min", c.balance.task.jitter.impulse_time_min},
             {"impulse_time_max", c.balance.task.jitter.impulse_time_max},
             {"population", c.balance.population},
             {"max_generations", c.balance.max_generations},
             {"validation_trials", c.balance.validation_trials},
             {"validation_required", c.balance.validation_required},
             {"required_uptime", c.balance.required_uptime},
             {"check_every", c.balance.check_every},
         }},
    };
    j["run"] = {
        {"master_seed", c.master_seed},
        {"workers", c.workers},
        {"out_dir", c.out_dir},
        {"single_deme", c.single_deme},
        {"settle_failure_score", c.settle_failure_score},
        {"checkpoint_every", c.checkpoint_every},
        {"log_evaluations", c.log_evaluations},
        {"budgets",
         {
             {"max_generations", c.budgets.max_generations},
             {"wall_clock_s", c.budgets.wall_clock_s},
             {"max_evaluations", c.budgets.max_evaluations},
             {"target_deme", c.budgets.target_deme},
             {"stable_generations", c.budgets.stable_generations},
         }},
    };
    return indent >= 0 ? j.dump(indent) : j.dump();
}

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    RunConfig c;
    Section root(j, "");

    if (const json* jp = root.sub("plant")) {
        Section s(*jp, "plant");
        const std::string type = s.get<std::string>("type", "biped");
        if (type == "biped")
            c.plant = PlantKind::Biped;
        else if (type == "chain")
            c.plant = PlantKind::Chain;
        else
            throw ConfigError("plant.type must be 'biped' or 'chain'");
        if (const json* jb = s.sub("biped")) {
            Section b(*jb, "plant.biped");
            BipedParams& p = c.biped;
            p.torso_mass = b.get("torso_mass", p.torso_mass);
            p.torso_length = b.get("torso_length", p.torso_length);
            p.thigh_mass = b.get("thigh_mass", p.thigh_mass);
            p.thigh_length = b.get("thigh_length", p.thigh_length);
            p.shank_mass = b.get("shank_mass", p.shank_mass);
            p.shank_length = b.get("shank_length", p.shank_length);
            p.foot_mass = b.get("foot_mass", p.foot_mass);
            p.foot_length = b.get("foot_length", p.foot_length);
            p.foot_height = b.get("foot_height", p.foot_height);
            p.hip_kp = b.get("hip_kp", p.hip_kp);
            p.hip_kd = b.get("hip_kd", p.hip_kd);
            p.hip_tau_max = b.get("hip_tau_max", p.hip_tau_max);
            p.knee_kp = b.get("knee_kp", p.knee_kp);
            p.knee_kd = b.get("knee_kd", p.knee_kd);
            p.knee_tau_max = b.get("knee_tau_max", p.knee_tau_max);
            p.ankle_kp = b.get("ankle_kp", p.ankle_kp);
            p.ankle_kd = b.get("ankle_kd", p.ankle_kd);
            p.ankle_tau_max = b.get("ankle_tau_max", p.ankle_tau_max);
            p.contact_kn = b.get("contact_kn", p.contact_kn);
            p.contact_cn = b.get("contact_cn", p.contact_cn);
            p.friction_mu = b.get("friction_mu", p.friction_mu);
            p.slip_velocity = b.get("slip_velocity", p.slip_velocity);
            p.gravity = b.get("gravity", p.gravity);
            p.substep_dt = b.get("substep_dt", p.substep_dt);
            p.substeps_per_tick = b.get("substeps_per_tick", p.substeps_per_tick);
            p.fall_pitch = b.get("fall_pitch", p.fall_pitch);
            p.fall_hip_height_frac = b.get("fall_hip_height_frac", p.fall_hip_height_frac);
            b.done();
        }
        if (const json* jc = s.sub("chain")) {
            Section ch(*jc, "plant.chain");
            ChainTaskParams& p = c.chain;
            p.chromosome_length = ch.get("chromosome_length", p.chromosome_length);
            p.gene_count = ch.get("gene_count", p.gene_count);
            p.wide_center = ch.get("wide_center", p.wide_center);
            p.wide_sigma = ch.get("wide_sigma", p.wide_sigma);
            p.wide_height = ch.get("wide_height", p.wide_height);
            p.narrow_center = ch.get("narrow_center", p.narrow_center);
            p.narrow_sigma = ch.get("narrow_sigma", p.narrow_sigma);
            p.narrow_height = ch.get("narrow_height", p.narrow_height);
            ch.done();
        }
        s.done();
    }

    if (const json* js = root.sub("schedule")) {
        Section s(*js, "schedule");
        ScheduleConfig& sc = c.schedule;
        sc.step_off_count = s.get("step_off_count", sc.step_off_count);
        sc.accel_count = s.get("accel_count", sc.accel_count);
        sc.middle_count = s.get("middle_count", sc.middle_count);
        sc.middle_reuse = s.get("middle_reuse", sc.middle_reuse);
        sc.decel_count = s.get("decel_count", sc.decel_count);
        sc.slice_duration = s.get("slice_duration", sc.slice_duration);
        sc.tick_duration = s.get("tick_duration", sc.tick_duration);
        sc.crossfade_duration = s.get("crossfade_duration", sc.crossfade_duration);
        sc.step_off_hidden = s.get("step_off_hidden", sc.step_off_hidden);
        sc.walk_hidden = s.get("walk_hidden", sc.walk_hidden);
        sc.balance_hidden = s.get("balance_hidden", sc.balance_hidden);
        sc.output_gain = s.get("output_gain", sc.output_gain);
        s.done();
    }

    if (const json* jt = root.sub("trajectory")) {
        Section s(*jt, "trajectory");
        if (const json* jc = s.sub("com")) {
            Section cm(*jc, "trajectory.com");
            c.com.t_accel = cm.get("t_accel", c.com.t_accel);
            c.com.t_coast = cm.get("t_coast", c.com.t_coast);
            c.com.t_decel = cm.get("t_decel", c.com.t_decel);
            c.com.total_distance = cm.get("total_distance", c.com.total_distance);
            cm.done();
        }
        if (const json* jg = s.sub("gait")) {
            Section g(*jg, "trajectory.gait");
            c.gait.step_period = g.get("step_period", c.gait.step_period);
            if (const json* jj = g.sub("joints")) {
                if (!jj->is_array() || jj->size() != kJointCount)
                    throw ConfigError("trajectory.gait.joints must list 6 joints "
                                      "(hipL kneeL ankleL hipR kneeR ankleR)");
                for (int i = 0; i < kJointCount; ++i) {
                    Section w((*jj)[i], "trajectory.gait.joints[" + std::to_string(i) + "]");
                    c.gait.joints[i].offset = w.get("offset", c.gait.joints[i].offset);
                    c.gait.joints[i].amplitude =
                        w.get("amplitude", c.gait.joints[i].amplitude);
                    c.gait.joints[i].phase = w.get("phase", c.gait.joints[i].phase);
                    w.done();
                    if (c.gait.joints[i].amplitude < 0)
                        throw ConfigError("gait amplitudes must be >= 0");
                }
            }
            g.done();
        }
        s.done();
    }

    if (const json* jw = root.sub("score_weights")) {
        Section s(*jw, "score_weights");
        c.weights.time = s.get("time", c.weights.time);
        c.weights.orient = s.get("orient", c.weights.orient);
        c.weights.com = s.get("com", c.weights.com);
        c.weights.joint = s.get("joint", c.weights.joint);
        c.weights.support = s.get("support", c.weights.support);
        s.done();
        if (c.weights.time <= 0) throw ConfigError("score_weights.time must be positive");
    }

    if (const json* jj = root.sub("jitter")) {
        Section s(*jj, "jitter");
        c.jitter.impulse_min = s.get("impulse_min", c.jitter.impulse_min);
        c.jitter.impulse_max = s.get("impulse_max", c.jitter.impulse_max);
        c.jitter.stance_halfwidth = s.get("stance_halfwidth", c.jitter.stance_halfwidth);
        c.jitter.settle_duration = s.get("settle_duration", c.jitter.settle_duration);
        c.jitter.impulse_time_min = s.get("impulse_time_min", c.jitter.impulse_time_min);
        c.jitter.impulse_time_max = s.get("impulse_time_max", c.jitter.impulse_time_max);
        s.done();
    }

    if (const json* jd = root.sub("demes")) {
        Section s(*jd, "demes");
        c.demes.deme_count = s.get("deme_count", c.demes.deme_count);
        c.demes.per_deme_capacity = s.get("per_deme_capacity", c.demes.per_deme_capacity);
        c.demes.global_capacity = s.get("global_capacity", c.demes.global_capacity);
        if (const json* jt = s.sub("thresholds")) {
            if (!jt->is_null())
                c.demes.thresholds = thresholds_from_json(*jt, "demes.thresholds");
        }
        c.threshold_rho = s.get("threshold_rho", c.threshold_rho);
        c.chain_threshold_slack = s.get("chain_threshold_slack", c.chain_threshold_slack);
        c.demes.migration_variance = s.get("migration_variance", c.demes.migration_variance);
        c.demes.invasion_epsilon = s.get("invasion_epsilon", c.demes.invasion_epsilon);
        s.done();
    }

    if (const json* jm = root.sub("mutation")) {
        Section s(*jm, "mutation");
        c.mutation.per_chromosome_rate =
            s.get("per_chromosome_rate", c.mutation.per_chromosome_rate);
        c.mutation.r_low = s.get("r_low", c.mutation.r_low);
        c.mutation.r_high = s.get("r_high", c.mutation.r_high);
        c.mutation.sign_flip_prob = s.get("sign_flip_prob", c.mutation.sign_flip_prob);
        c.mutation.zero_reseed_halfwidth =
            s.get("zero_reseed_halfwidth", c.mutation.zero_reseed_halfwidth);
        s.done();
        if (c.mutation.r_low >= c.mutation.r_high)
            throw ConfigError("mutation.r_low must be < mutation.r_high");
    }

    if (const json* jb = root.sub("balance")) {
        Section s(*jb, "balance");
        c.balance_weights_path = s.get("weights_path", c.balance_weights_path);
        c.allow_unvalidated_balance = s.get("allow_unvalidated", c.allow_unvalidated_balance);
        if (const json* jp = s.sub("pretrain")) {
            Section p(*jp, "balance.pretrain");
            c.balance.task.duration = p.get("duration", c.balance.task.duration);
            c.balance.task.jitter.impulse_min =
                p.get("impulse_min", c.balance.task.jitter.impulse_min);
            c.balance.task.jitter.impulse_max =
                p.get("impulse_max", c.balance.task.jitter.impulse_max);
            c.balance.task.jitter.stance_halfwidth =
                p.get("stance_halfwidth", c.balance.task.jitter.stance_halfwidth);
            c.balance.task.jitter.impulse_time_min =
                p.get("impulse_time_min", c.balance.task.jitter.impulse_time_min);
            c.balance.task.jitter.impulse_time_max =
                p.get("impulse_time_max", c.balance.task.jitter.impulse_time_max);
            c.balance.population = p.get("population", c.balance.population);
            c.balance.max_generations = p.get("max_generations", c.balance.max_generations);
            c.balance.validation_trials =
                p.get("validation_trials", c.balance.validation_trials);
            c.balance.validation_required =
                p.get("validation_required", c.balance.validation_required);
            c.balance.required_uptime = p.get("required_uptime", c.balance.required_uptime);
            c.balance.check_every = p.get("check_every", c.balance.check_every);
            p.done();
        }
        s.done();
    }

    if (const json* jr = root.sub("run")) {
        Section s(*jr, "run");
        c.master_seed = s.get("master_seed", c.master_seed);
        c.workers = s.get("workers", c.workers);
        c.out_dir = s.get("out_dir", c.out_dir);
        c.single_deme = s.get("single_deme", c.single_deme);
        c.settle_failure_score = s.get("settle_failure_score", c.settle_failure_score);
        c.checkpoint_every = s.get("checkpoint_every", c.checkpoint_every);
        c.log_evaluations = s.get("log_evaluations", c.log_evaluations);
        if (const json* jbud = s.sub("budgets")) {
            Section b(*jbud, "run.budgets");
            c.budgets.max_generations = b.get("max_generations", c.budgets.max_generations);
            c.budgets.wall_clock_s = b.get("wall_clock_s", c.budgets.wall_clock_s);
            c.budgets.max_evaluations = b.get("max_evaluations", c.budgets.max_evaluations);
            c.budgets.target_deme = b.get("target_deme", c.budgets.target_deme);
            c.budgets.stable_generations =
                b.get("stable_generations", c.budgets.stable_generations);
            b.done();
        }
        s.done();
    }

    root.done();

    // cross-checks that do not need the plant built
    resolve_thresholds(c);
    if (c.workers < 1) throw ConfigError("run.workers must be >= 1");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

void save_config(const RunConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << config_to_json(c, 2) << "\n";
}

std::string config_hash(const RunConfig& c) {
    return fnv1a_hex(config_to_json(c));
}

} // namespace stride
