#include "dnefc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dnefc/errors.hpp"
#include "dnefc/parallel.hpp"
#include "dnefc/philox.hpp"

namespace dnefc {

namespace {
constexpr std::uint32_t kDirectionDomain = 2;
} // namespace

std::size_t default_thread_count() noexcept {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

void TrainConfig::validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be finite and non-negative");
    if (episodes_per_generation < 2 || episodes_per_generation % 2 != 0) {
        throw ValidationError("episodes_per_generation must be even and at least 2");
    }
    if (!(elite_fraction > 0.0 && elite_fraction <= 1.0)) throw ValidationError("elite_fraction must lie in (0, 1]");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"sigma", sigma},
            {"episodes_per_generation", episodes_per_generation},
            {"elite_fraction", elite_fraction},
            {"max_generations", max_generations},
            {"master_seed", master_seed},
            {"early_stop_patience", early_stop_patience}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    try {
        c.sigma = j.value("sigma", c.sigma);
        c.episodes_per_generation = j.value("episodes_per_generation", c.episodes_per_generation);
        c.elite_fraction = j.value("elite_fraction", c.elite_fraction);
        c.max_generations = j.value("max_generations", c.max_generations);
        c.master_seed = j.value("master_seed", c.master_seed);
        c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed train config: ") + e.what());
    }
    return c;
}

void fill_direction(std::uint64_t master_seed, std::uint64_t generation, std::size_t index, std::span<float> out) {
    const CounterStream stream(master_seed, CounterStream::make_id(kDirectionDomain, static_cast<std::uint32_t>(generation),
                                                                   static_cast<std::uint32_t>(index)));
    const std::size_t n = out.size();
    for (std::size_t k = 0; k < n; k += 2) {
        const auto z = box_muller(stream.block(k / 2));
        out[k] = static_cast<float>(z[0]);
        if (k + 1 < n) out[k + 1] = static_cast<float>(z[1]);
    }
}

std::vector<std::vector<float>> sample_directions(std::uint64_t master_seed, std::uint64_t generation, std::size_t count,
                                                  std::size_t param_count, std::size_t threads) {
    std::vector<std::vector<float>> dirs(count, std::vector<float>(param_count));
    parallel_for(count, threads, [&](std::size_t i, std::size_t) { fill_direction(master_seed, generation, i, dirs[i]); });
    return dirs;
}

void perturbation_step(std::span<const float> direction, double sigma, std::span<float> out) noexcept {
    for (std::size_t k = 0; k < direction.size(); ++k) out[k] = snap_to_lattice(sigma * static_cast<double>(direction[k]));
}

std::vector<Candidate> make_children(const FlatGenome& parent, const std::vector<std::vector<float>>& directions,
                                     double sigma) {
    std::vector<Candidate> out;
    out.reserve(2 * directions.size());
    std::vector<float> step(parent.param_count());
    for (std::size_t i = 0; i < directions.size(); ++i) {
        if (directions[i].size() != parent.param_count()) {
            throw ValidationError("direction length does not match the genome");
        }
        perturbation_step(directions[i], sigma, step);
        Candidate plus{parent, i, +1, std::nullopt};
        Candidate minus{parent, i, -1, std::nullopt};
        for (std::size_t k = 0; k < step.size(); ++k) {
            plus.genome.values[k] = parent.values[k] + step[k];
            minus.genome.values[k] = parent.values[k] - step[k];
        }
        out.push_back(std::move(plus));
        out.push_back(std::move(minus));
    }
    return out;
}

double evaluate_fitness(const NetworkSpec& spec, std::span<const float> genome, std::span<const AdjacencyMatrix> dataset) {
    if (dataset.empty()) throw UsageError("cannot evaluate fitness on an empty dataset");
    std::size_t correct = 0;
    for (const auto& m : dataset) {
        if (predict(forward(spec, genome, m)) == m.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

std::size_t elite_count(std::size_t n, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("elite_fraction must lie in (0, 1]");
    if (n == 0) return 0;
    // The relative nudge absorbs representation error such as 0.3 * 10 = 3.0000000000000004.
    const double x = fraction * static_cast<double>(n);
    const auto k = static_cast<std::size_t>(std::ceil(x - x * 1e-12));
    return std::clamp<std::size_t>(k, 1, n);
}

std::vector<Candidate> select_elite(std::vector<Candidate> candidates, double fraction) {
    for (const auto& c : candidates) {
        if (!c.fitness) throw ValidationError("select_elite needs every candidate evaluated");
    }
    const std::size_t keep = elite_count(candidates.size(), fraction);
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (*a.fitness != *b.fitness) return *a.fitness > *b.fitness;
        if (a.pair_index != b.pair_index) return a.pair_index < b.pair_index;
        return a.direction > b.direction;
    });
    candidates.resize(keep);
    return candidates;
}

FlatGenome incorporate(const FlatGenome& parent, std::span<const Candidate> elite) {
    if (elite.empty()) throw ValidationError("cannot incorporate an empty elite");
    FlatGenome next = parent;
    const double count = static_cast<double>(elite.size());
    for (std::size_t k = 0; k < parent.param_count(); ++k) {
        double sum = 0.0;
        for (const auto& c : elite) sum += static_cast<double>(c.genome.values[k]);
        next.values[k] = snap_to_lattice(sum / count);
    }
    return next;
}

Trainer::Trainer(NetworkSpec spec, std::vector<AdjacencyMatrix> train, std::vector<AdjacencyMatrix> test,
                 TrainConfig config, std::size_t threads)
    : spec_(std::move(spec)), train_(std::move(train)), test_(std::move(test)), config_(config),
      threads_(std::max<std::size_t>(1, threads)) {
    config_.validate();
    if (train_.empty()) throw UsageError("training set is empty");
    std::set<std::string> ids;
    for (const auto& m : train_) {
        (void)as_input(spec_, m);
        ids.insert(m.id);
    }
    for (const auto& m : test_) {
        (void)as_input(spec_, m);
        if (ids.count(m.id)) throw ValidationError("matrix '" + m.id + "' appears in both train and test sets");
    }
}

TrainerState Trainer::initial_state() const { return TrainerState{glorot_init(spec_, config_.master_seed), 0, 0}; }

bool Trainer::finished(const TrainerState& state) const noexcept {
    if (state.generation >= config_.max_generations) return true;
    return config_.early_stop_patience > 0 && state.perfect_streak >= config_.early_stop_patience;
}

GenerationStats Trainer::run_generation(TrainerState& state) const {
    const std::size_t params = spec_.param_count();
    if (state.parent.param_count() != params) throw ValidationError("parent genome does not match the network spec");
    const std::size_t pairs = config_.pairs();
    const std::size_t children = 2 * pairs;
    const std::uint64_t generation = state.generation + 1;
    const std::vector<float>& parent = state.parent.values;

    std::vector<std::vector<float>> steps(pairs, std::vector<float>(params));
    parallel_for(pairs, threads_, [&](std::size_t i, std::size_t) {
        fill_direction(config_.master_seed, generation, i, steps[i]);
        perturbation_step(steps[i], config_.sigma, steps[i]);
    });

    // Child c is pair c / 2; even c adds the step, odd c subtracts it.
    std::vector<double> fitness(children);
    std::vector<std::vector<float>> scratch(std::min(threads_, children), std::vector<float>(params));
    parallel_for(children, threads_, [&](std::size_t c, std::size_t worker) {
        const auto& step = steps[c / 2];
        auto& child = scratch[worker];
        if (c % 2 == 0) {
            for (std::size_t k = 0; k < params; ++k) child[k] = parent[k] + step[k];
        } else {
            for (std::size_t k = 0; k < params; ++k) child[k] = parent[k] - step[k];
        }
        fitness[c] = evaluate_fitness(spec_, child, train_);
    });

    std::vector<std::size_t> order(children);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
    order.resize(elite_count(children, config_.elite_fraction));

    std::vector<float> next(params);
    const double count = static_cast<double>(order.size());
    for (std::size_t k = 0; k < params; ++k) {
        double sum = 0.0;
        for (const std::size_t c : order) {
            const float v = c % 2 == 0 ? parent[k] + steps[c / 2][k] : parent[k] - steps[c / 2][k];
            sum += static_cast<double>(v);
        }
        next[k] = snap_to_lattice(sum / count);
    }

    GenerationStats stats;
    stats.generation = generation;
    stats.best_child = *std::max_element(fitness.begin(), fitness.end());
    stats.worst_child = *std::min_element(fitness.begin(), fitness.end());
    stats.mean_child = std::accumulate(fitness.begin(), fitness.end(), 0.0) / static_cast<double>(children);
    // Guard against rounding pushing the mean outside [worst, best].
    stats.mean_child = std::clamp(stats.mean_child, stats.worst_child, stats.best_child);

    state.parent.values = std::move(next);
    state.generation = generation;
    stats.parent_train_acc = evaluate_fitness(spec_, state.parent.view(), train_);
    if (!test_.empty()) stats.test_acc = evaluate_fitness(spec_, state.parent.view(), test_);
    state.perfect_streak = stats.parent_train_acc == 1.0 ? state.perfect_streak + 1 : 0;
    return stats;
}

std::vector<GenerationStats> Trainer::run(TrainerState& state, const Observer& observer) const {
    std::vector<GenerationStats> all;
    while (!finished(state)) {
        all.push_back(run_generation(state));
        if (observer) observer(state, all.back());
    }
    return all;
}

TrainResult train(const NetworkSpec& spec, const std::vector<AdjacencyMatrix>& train_set,
                  const std::vector<AdjacencyMatrix>& test_set, const TrainConfig& config, std::size_t threads) {
    Trainer trainer(spec, train_set, test_set, config, threads);
    auto state = trainer.initial_state();
    auto stats = trainer.run(state);
    return {std::move(state.parent), std::move(stats)};
}

} // namespace dnefc
