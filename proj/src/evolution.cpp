#include "stride/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include <json.hpp>

#include "stride/errors.hpp"

namespace stride {

namespace {
constexpr std::uint64_t kTagEval = 0xE7A1;
constexpr std::uint64_t kTagRepro = 0x5E0;
constexpr std::uint64_t kTagMigrate = 0x316;

std::size_t roulette(const std::vector<double>& weights, double total, Rng& rng) {
    const double u = rng.uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    // numerical edge: fall back to the last positive weight
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return 0;
}
} // namespace

std::vector<double> default_biped_thresholds(double rho, double w_time) {
    std::vector<double> tau(kDemeCount);
    tau[0] = -std::numeric_limits<double>::infinity();
    for (int k = 1; k < kDemeCount; ++k)
        tau[k] = rho * w_time * timeline_for(k - 1).controlled;
    return tau;
}

Engine::Engine(EngineConfig cfg, const Evaluator& evaluator)
    : cfg_(std::move(cfg)), evaluator_(&evaluator) {
    if (cfg_.demes.deme_count < 1)
        throw ConfigError("deme_count must be >= 1");
    if (cfg_.single_deme && cfg_.demes.deme_count != 1)
        throw ConfigError("single-deme mode requires deme_count = 1");
    if (static_cast<int>(cfg_.demes.thresholds.size()) != cfg_.demes.deme_count)
        throw ConfigError("thresholds array must have one entry per deme");
    if (cfg_.demes.per_deme_capacity < 1 || cfg_.demes.global_capacity < 1)
        throw ConfigError("capacities must be positive");
    if (cfg_.workers < 1) cfg_.workers = 1;
}

void Engine::initialize() {
    population_.clear();
    const auto shapes = evaluator_->genotype_shapes();
    for (int i = 0; i < cfg_.demes.per_deme_capacity; ++i) {
        Individual ind;
        ind.genotype = make_zero_genotype(shapes, next_id_++);
        ind.position = 0.5; // middle of deme 0
        population_.push_back(std::move(ind));
    }
    generation_ = 0;
    max_deme_ever_ = 0;
}

std::vector<double> Engine::scale_scores(const std::vector<double>& scores, double tau) {
    std::vector<double> w(scores.size(), 0.0);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    int eligible = 0;
    for (double s : scores) {
        if (s < tau) continue;
        ++eligible;
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    if (eligible == 0) return w;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] < tau) continue;
        w[i] = (hi == lo) ? 1.0 : 0.01 + 0.99 * (scores[i] - lo) / (hi - lo);
    }
    return w;
}

double Engine::apply_migration_step(double position, double step, double score,
                                    const std::vector<double>& thresholds, int deme_count,
                                    double epsilon) {
    const double D = deme_count;
    double p = position + step;
    for (int guard = 0; guard < 64 && (p < 0.0 || p >= D); ++guard) {
        if (p < 0.0)
            p = -p;
        else
            p = 2.0 * D - p;
    }
    p = std::clamp(p, 0.0, std::nextafter(D, 0.0));

    const int from = static_cast<int>(std::floor(position));
    const int to = static_cast<int>(std::floor(p));
    if (to > from) {
        for (int j = from + 1; j <= to; ++j) {
            if (score < thresholds[j]) {
                p = j - epsilon; // blocked at the gate into deme j
                break;
            }
        }
    }
    return p;
}

void Engine::enforce_capacity(std::vector<Individual>& pop, const DemeConfig& cfg) {
    std::map<int, std::vector<std::size_t>, std::greater<int>> by_deme;
    for (std::size_t i = 0; i < pop.size(); ++i) by_deme[pop[i].deme()].push_back(i);

    std::vector<Individual> kept;
    kept.reserve(std::min<std::size_t>(pop.size(), cfg.global_capacity));
    int budget = cfg.global_capacity;
    for (auto& [deme, members] : by_deme) {
        if (budget <= 0) break;
        std::sort(members.begin(), members.end(), [&pop](std::size_t a, std::size_t b) {
            if (pop[a].rank_score != pop[b].rank_score)
                return pop[a].rank_score > pop[b].rank_score;
            return pop[a].genotype.id < pop[b].genotype.id;
        });
        const int take =
            std::min({static_cast<int>(members.size()), cfg.per_deme_capacity, budget});
        for (int i = 0; i < take; ++i) kept.push_back(std::move(pop[members[i]]));
        budget -= take;
    }
    std::sort(kept.begin(), kept.end(), [](const Individual& a, const Individual& b) {
        return a.genotype.id < b.genotype.id;
    });
    pop = std::move(kept);
}

void Engine::evaluate_population() {
    const std::size_t n = population_.size();
    std::vector<EvalOutcome> results(n);
    std::vector<int> eval_demes(n);
    for (std::size_t i = 0; i < n; ++i)
        eval_demes[i] = cfg_.single_deme ? evaluator_->max_deme() : population_[i].deme();

    auto work = [&](std::atomic<std::size_t>& cursor) {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= n) return;
            const std::uint64_t seed =
                derive_seed(cfg_.master_seed, kTagEval,
                            static_cast<std::uint64_t>(generation_),
                            population_[i].genotype.id);
            results[i] = evaluator_->evaluate(population_[i].genotype, eval_demes[i], seed);
        }
    };

    std::atomic<std::size_t> cursor{0};
    const int workers = std::min<int>(cfg_.workers, static_cast<int>(n));
    if (workers <= 1) {
        work(cursor);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back([&] { work(cursor); });
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < n; ++i) {
        population_[i].last_score = results[i].mean;
        population_[i].rank_score = results[i].mean;
        population_[i].age += 1;
        if (results[i].mean > best_score_ever_) best_score_ever_ = results[i].mean;
        if (eval_callback_)
            eval_callback_(generation_, population_[i], eval_demes[i], results[i]);
    }
    evaluations_ += static_cast<long>(n);
}

void Engine::step_generation() {
    if (population_.empty())
        throw std::runtime_error("population extinct at generation " +
                                 std::to_string(generation_));

    // (1) score everyone in its current deme
    evaluate_population();

    GenerationRecord rec;
    rec.generation = generation_;

    std::map<int, std::vector<std::size_t>> by_deme;
    for (std::size_t i = 0; i < population_.size(); ++i)
        by_deme[population_[i].deme()].push_back(i);

    for (const auto& [deme, members] : by_deme) {
        DemeStats ds;
        ds.deme = deme;
        ds.evaluated = static_cast<int>(members.size());
        ds.threshold = cfg_.demes.thresholds[deme];
        double sum = 0.0;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i : members) {
            const double s = *population_[i].last_score;
            sum += s;
            if (s > best) {
                best = s;
                ds.best_id = population_[i].genotype.id;
            }
        }
        ds.mean_score = sum / members.size();
        ds.max_score = best;
        rec.demes.push_back(ds);
    }

    // (2)+(3) threshold-gated sexual reproduction per deme; offspring replace
    // parents in fertile demes and are mutated on creation
    Rng repro_rng(derive_seed(cfg_.master_seed, kTagRepro,
                              static_cast<std::uint64_t>(generation_)));
    std::vector<Individual> next;
    next.reserve(population_.size() + cfg_.demes.per_deme_capacity);
    for (const auto& [deme, members] : by_deme) {
        const double tau = cfg_.demes.thresholds[deme];
        std::vector<double> scores;
        scores.reserve(members.size());
        for (std::size_t i : members) scores.push_back(*population_[i].last_score);
        const std::vector<double> weights = scale_scores(scores, tau);
        double total = 0.0;
        int eligible = 0;
        for (double w : weights) {
            total += w;
            if (w > 0.0) ++eligible;
        }
        if (eligible < 2) {
            // infertile deme: parents persist
            for (std::size_t i : members) next.push_back(std::move(population_[i]));
            continue;
        }
        for (int n = 0; n < cfg_.demes.per_deme_capacity; ++n) {
            const std::size_t ia = roulette(weights, total, repro_rng);
            std::size_t ib = ia;
            for (int guard = 0; guard < 1000 && ib == ia; ++guard)
                ib = roulette(weights, total, repro_rng);
            if (ib == ia) { // degenerate numeric case: pick another eligible
                for (std::size_t j = 0; j < weights.size(); ++j)
                    if (j != ia && weights[j] > 0.0) {
                        ib = j;
                        break;
                    }
            }
            const Individual& pa = population_[members[ia]];
            const Individual& pb = population_[members[ib]];

            audit_.parent_selections += 2;
            if (*pa.last_score < tau || *pb.last_score < tau)
                audit_.below_threshold_parents += 1;
            if (pa.deme() != pb.deme()) audit_.cross_deme_pairs += 1;

            Individual child;
            child.genotype = reproduce(pa.genotype, pb.genotype, next_id_++, repro_rng);
            for (auto& c : child.genotype.chromosomes)
                c = mutate_chromosome(c, cfg_.mutation, repro_rng);
            double mid = 0.5 * (pa.position + pb.position);
            const double lo = deme;
            const double hi = std::nextafter(static_cast<double>(deme + 1), lo);
            child.position = std::clamp(mid, lo, hi);
            child.rank_score = 0.5 * (*pa.last_score + *pb.last_score);
            next.push_back(std::move(child));
        }
    }
    population_ = std::move(next);

    // (4) migration (random walk with invasion gates), then capacity
    if (!cfg_.single_deme) {
        std::sort(population_.begin(), population_.end(),
                  [](const Individual& a, const Individual& b) {
                      return a.genotype.id < b.genotype.id;
                  });
        Rng mig_rng(derive_seed(cfg_.master_seed, kTagMigrate,
                                static_cast<std::uint64_t>(generation_)));
        const double sigma = std::sqrt(cfg_.demes.migration_variance);
        for (auto& ind : population_) {
            const double step = mig_rng.normal(0.0, sigma);
            const double gate_score =
                ind.last_score ? *ind.last_score : -std::numeric_limits<double>::infinity();
            ind.position =
                apply_migration_step(ind.position, step, gate_score, cfg_.demes.thresholds,
                                     cfg_.demes.deme_count, cfg_.demes.invasion_epsilon);
            audit_.migration_steps += 1;
        }
    }
    enforce_capacity(population_, cfg_.demes);

    // bookkeeping and record
    std::map<int, int> occupancy;
    for (const auto& ind : population_) occupancy[ind.deme()] += 1;
    for (auto& ds : rec.demes) {
        auto it = occupancy.find(ds.deme);
        ds.after = it == occupancy.end() ? 0 : it->second;
    }
    int total = 0;
    for (auto& [deme, cnt] : occupancy) {
        total += cnt;
        max_deme_ever_ = std::max(max_deme_ever_, deme);
        if (cnt > cfg_.demes.per_deme_capacity) audit_.capacity_violations += 1;
    }
    if (total > cfg_.demes.global_capacity) audit_.capacity_violations += 1;
    rec.population_after = total;
    rec.max_deme_ever = max_deme_ever_;
    rec.best_score_ever = best_score_ever_;
    last_record_ = std::move(rec);

    generation_ += 1;
}

const Individual* Engine::best_in_deme(int k) const {
    const Individual* best = nullptr;
    for (const auto& ind : population_) {
        if (ind.deme() != k) continue;
        if (!best || ind.rank_score > best->rank_score) best = &ind;
    }
    return best;
}

std::string Engine::checkpoint_json(const std::string& config_hash) const {
    nlohmann::json j;
    j["format"] = "stride-checkpoint";
    j["version"] = 1;
    j["config_hash"] = config_hash;
    j["generation"] = generation_;
    j["next_id"] = next_id_;
    j["master_seed"] = cfg_.master_seed;
    j["max_deme_ever"] = max_deme_ever_;
    j["best_score_ever"] = best_score_ever_;
    j["evaluations"] = evaluations_;
    auto& arr = j["individuals"] = nlohmann::json::array();
    for (const auto& ind : population_) {
        nlohmann::json ji;
        ji["id"] = ind.genotype.id;
        ji["lineage"] = ind.genotype.lineage;
        ji["position"] = ind.position;
        if (ind.last_score)
            ji["last_score"] = *ind.last_score;
        ji["rank_score"] = ind.rank_score;
        ji["age"] = ind.age;
        auto& cs = ji["chromosomes"] = nlohmann::json::array();
        for (const auto& c : ind.genotype.chromosomes)
            cs.push_back({{"topology_id", c.topology_id}, {"weights", c.weights}});
        arr.push_back(std::move(ji));
    }
    return j.dump();
}

void Engine::restore_checkpoint_json(const std::string& text, std::string* config_hash_out) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("checkpoint parse error: ") + e.what());
    }
    if (j.value("format", "") != "stride-checkpoint")
        throw StructuralError("not a stride-checkpoint file");
    if (config_hash_out) *config_hash_out = j.value("config_hash", "");
    generation_ = j.at("generation").get<long>();
    next_id_ = j.at("next_id").get<std::uint64_t>();
    max_deme_ever_ = j.value("max_deme_ever", 0);
    best_score_ever_ =
        j.value("best_score_ever", -std::numeric_limits<double>::infinity());
    evaluations_ = j.value("evaluations", 0L);
    population_.clear();
    const auto shapes = evaluator_->genotype_shapes();
    for (const auto& ji : j.at("individuals")) {
        Individual ind;
        ind.genotype.id = ji.at("id").get<std::uint64_t>();
        ind.genotype.lineage = ji.at("lineage").get<std::array<std::uint64_t, 2>>();
        for (const auto& cj : ji.at("chromosomes")) {
            Chromosome c;
            c.topology_id = cj.at("topology_id").get<std::string>();
            c.weights = cj.at("weights").get<std::vector<double>>();
            ind.genotype.chromosomes.push_back(std::move(c));
        }
        validate_genotype(ind.genotype, shapes);
        ind.position = ji.at("position").get<double>();
        if (ji.contains("last_score")) ind.last_score = ji.at("last_score").get<double>();
        ind.rank_score = ji.at("rank_score").get<double>();
        ind.age = ji.value("age", 0);
        if (ind.position < 0.0 || ind.position >= cfg_.demes.deme_count)
            throw StructuralError("checkpoint individual position out of range");
        population_.push_back(std::move(ind));
    }
}

} // namespace stride
