#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "dnefc/adjacency.hpp"
#include "dnefc/network.hpp"

namespace dnefc {

struct TrainConfig {
    double sigma = 0.1; // 0 freezes the parent
    std::size_t episodes_per_generation = 40;
    double elite_fraction = 0.5;
    std::size_t max_generations = 10000;
    std::uint64_t master_seed = 0;
    /// Stop after this many consecutive generations with a perfect parent on
    /// the training set. Zero disables early stopping.
    std::size_t early_stop_patience = 10;

    void validate() const;
    std::size_t pairs() const noexcept { return episodes_per_generation / 2; }
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
    bool operator==(const TrainConfig&) const = default;
};

struct Candidate {
    FlatGenome genome;
    std::size_t pair_index = 0;
    int direction = +1; // +1 or -1
    std::optional<double> fitness;
};

struct GenerationStats {
    std::size_t generation = 0;
    double best_child = 0.0;
    double mean_child = 0.0;
    double worst_child = 0.0;
    double parent_train_acc = 0.0;
    std::optional<double> test_acc;
    bool operator==(const GenerationStats&) const = default;
};

/// Standard-normal direction `index` of `generation`, drawn from the Philox
/// stream keyed by (master_seed, generation, index).
void fill_direction(std::uint64_t master_seed, std::uint64_t generation, std::size_t index, std::span<float> out);
std::vector<std::vector<float>> sample_directions(std::uint64_t master_seed, std::uint64_t generation, std::size_t count,
                                                  std::size_t param_count, std::size_t threads = 1);

/// Lattice-rounded step sigma * delta; parent +/- step is exact in float32.
void perturbation_step(std::span<const float> direction, double sigma, std::span<float> out) noexcept;

/// Two mirrored candidates per direction: parent + step (direction +1) then
/// parent - step (direction -1), in pair order.
std::vector<Candidate> make_children(const FlatGenome& parent, const std::vector<std::vector<float>>& directions,
                                     double sigma);

/// Fraction of matrices whose predicted label matches. Throws UsageError on an
/// empty dataset.
double evaluate_fitness(const NetworkSpec& spec, std::span<const float> genome,
                        std::span<const AdjacencyMatrix> dataset);
inline double evaluate_fitness(const NetworkSpec& spec, const FlatGenome& genome,
                               std::span<const AdjacencyMatrix> dataset) {
    return evaluate_fitness(spec, genome.view(), dataset);
}

/// ceil(fraction * n), clamped to [1, n].
std::size_t elite_count(std::size_t n, double fraction);

/// Orders by fitness (descending), then pair index, then +1 before -1, and
/// keeps the first elite_count(n, fraction).
std::vector<Candidate> select_elite(std::vector<Candidate> candidates, double fraction);

/// Element-wise mean of the elite genomes, rounded onto the parameter lattice.
FlatGenome incorporate(const FlatGenome& parent, std::span<const Candidate> elite);

struct TrainerState {
    FlatGenome parent;
    std::size_t generation = 0;   // completed generations
    std::size_t perfect_streak = 0; // consecutive generations with parent_train_acc == 1
};

struct TrainResult {
    FlatGenome parent;
    std::vector<GenerationStats> stats;
};

class Trainer {
public:
    using Observer = std::function<void(const TrainerState&, const GenerationStats&)>;

    Trainer(NetworkSpec spec, std::vector<AdjacencyMatrix> train, std::vector<AdjacencyMatrix> test, TrainConfig config,
            std::size_t threads = 1);

    TrainerState initial_state() const;

    /// One full cycle: sample directions, evaluate all mirrored children,
    /// select the elite, replace the parent by the elite mean, report.
    GenerationStats run_generation(TrainerState& state) const;

    bool finished(const TrainerState& state) const noexcept;

    /// Runs generations until max_generations or early stop, calling
    /// `observer` after each one.
    std::vector<GenerationStats> run(TrainerState& state, const Observer& observer = {}) const;

    const NetworkSpec& spec() const noexcept { return spec_; }
    const TrainConfig& config() const noexcept { return config_; }

private:
    NetworkSpec spec_;
    std::vector<AdjacencyMatrix> train_;
    std::vector<AdjacencyMatrix> test_;
    TrainConfig config_;
    std::size_t threads_;
};

TrainResult train(const NetworkSpec& spec, const std::vector<AdjacencyMatrix>& train_set,
                  const std::vector<AdjacencyMatrix>& test_set, const TrainConfig& config, std::size_t threads = 1);

} // namespace dnefc
