#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnefc/adjacency.hpp"

namespace dnefc {

struct Dataset {
    std::vector<AdjacencyMatrix> train;
    std::vector<AdjacencyMatrix> test;
};

/// Throws ValidationError on duplicate ids, mixed sizes or out-of-range values.
void validate_dataset(const Dataset& d);

/// Synthetic stand-in for clinical connectomes: both classes share a planted
/// community structure except for a set of marker ROIs whose membership is
/// reassigned in the HGG template.
struct SynthConfig {
    std::size_t n_rois = 105;
    std::size_t n_per_class_train = 15;
    std::size_t n_per_class_test = 15;
    std::size_t community_count = 4;
    /// Fraction of ROIs reassigned to another community in the HGG template.
    double separability = 0.3;
    double noise_sigma = 0.03;
    std::uint64_t seed = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static SynthConfig from_json(const nlohmann::json& j);
    bool operator==(const SynthConfig&) const = default;
};

struct ClassTemplates {
    std::vector<std::size_t> membership[2]; // community per ROI, per class
    std::vector<std::size_t> marker_rois;   // sorted; rows where the classes differ
};

ClassTemplates make_templates(const SynthConfig& cfg);
AdjacencyMatrix generate_subject(const SynthConfig& cfg, const ClassTemplates& templates, Label label,
                                 std::uint32_t subject_index, std::string id);
Dataset generate_synthetic_dataset(const SynthConfig& cfg);

// Matrix files are plain CSV: n lines of n comma-separated decimals, printed
// with the shortest representation that round-trips a float32.
void save_matrix(const std::filesystem::path& path, std::size_t n, std::span<const float> values);
void save_matrix(const std::filesystem::path& path, const AdjacencyMatrix& m);
/// Reads a square CSV matrix. Parse errors name the 1-based row and column.
std::vector<float> load_matrix(const std::filesystem::path& path, std::size_t& n);
AdjacencyMatrix load_adjacency(const std::filesystem::path& path, std::string id, Label label);

struct ManifestEntry {
    std::string id;
    Label label = Label::LGG;
    std::string path; // relative to the manifest directory
    std::string split; // "train" | "test"
};

/// Writes `<id>.csv` for every matrix plus manifest.json into `dir`.
void write_dataset(const std::filesystem::path& dir, const Dataset& d, const nlohmann::json& provenance);
void write_manifest(const std::filesystem::path& file, const std::vector<ManifestEntry>& entries,
                    const nlohmann::json& provenance);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& file);
/// Loads a dataset directory (or manifest path) into memory.
Dataset load_dataset(const std::filesystem::path& dir_or_manifest);

double mean_intensity(const AdjacencyMatrix& m) noexcept;

} // namespace dnefc
