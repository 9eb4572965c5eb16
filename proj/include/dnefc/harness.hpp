#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "dnefc/dataset.hpp"
#include "dnefc/network.hpp"
#include "dnefc/saliency.hpp"
#include "dnefc/trainer.hpp"

namespace dnefc {

/// Everything a run needs. Serialized next to every artifact it produces.
struct RunConfig {
    TrainConfig train;
    SynthConfig synth;
    std::string arch = "default"; // "default" or "compact"; ignored when spec_path is set
    std::string spec_path;
    std::string dataset_dir;
    std::string output_dir;
    std::size_t threads = 0; // 0 = available cores
    bool emit_plots = true;
    std::size_t checkpoint_every = 100;
    bool force = false;
    bool resume = false;

    std::size_t resolved_threads() const noexcept;
    nlohmann::json to_json() const;
    /// Missing keys keep their defaults.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
};

/// Writes matrices, manifest.json and run_config.json to cfg.output_dir.
/// Refuses a non-empty directory unless cfg.force.
Dataset cmd_synth(const RunConfig& cfg, std::ostream& log);

NetworkSpec resolve_spec(const RunConfig& cfg, std::size_t n);

struct TrainSummary {
    FlatGenome parent;
    std::size_t generations = 0;
    std::optional<GenerationStats> last;
};

/// Trains on cfg.dataset_dir, writing into cfg.output_dir:
///   run_config.json, spec.json, metrics.csv (one flushed row per generation),
///   checkpoint.dnec (at start, every checkpoint_every generations, and at
///   stop), final_genome.dnew and, with emit_plots, train_accuracy.svg and
///   test_accuracy.svg. With cfg.resume, continues from checkpoint.dnec.
TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log);

struct EvalReport {
    std::size_t total = 0;
    std::array<std::array<std::size_t, 2>, 2> confusion{}; // [true][predicted]
    double overall = 0.0;
    std::array<double, 2> per_class{};
};

EvalReport evaluate_report(const NetworkSpec& spec, const FlatGenome& genome, std::span<const AdjacencyMatrix> data);
void print_report(const EvalReport& r, std::ostream& out);
/// split: "train", "test" or "all".
EvalReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset,
                    const std::string& split, std::ostream& out);

/// Writes <stem>.saliency.{csv,pgm,svg} and saliency_config.json into out_dir.
SaliencyMap cmd_saliency(const std::filesystem::path& checkpoint, const std::filesystem::path& matrix_file,
                         const OcclusionConfig& cfg, const std::filesystem::path& out_dir, std::size_t threads,
                         std::ostream& log);

/// Prints a summary of a checkpoint, genome (needs spec_path), spec JSON,
/// dataset directory or metrics file.
void cmd_inspect(const std::filesystem::path& path, const std::filesystem::path& spec_path, std::ostream& out);

} // namespace dnefc
