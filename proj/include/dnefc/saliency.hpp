#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnefc/adjacency.hpp"
#include "dnefc/network.hpp"

namespace dnefc {

struct OcclusionConfig {
    std::size_t patch_size = 7;
    std::size_t stride = 3;
    float baseline = 0.0f;
    std::optional<Label> target; // nullopt: the predicted class

    void validate(std::size_t n) const;
};

struct SaliencyMap {
    std::size_t n = 0;
    std::vector<float> values; // row-major, non-negative, max 1 unless all zero
    std::string input_id;
    Label target_class = Label::LGG;

    float at(std::size_t row, std::size_t col) const noexcept { return values[row * n + col]; }
};

/// Patch origins along one axis: 0, stride, 2*stride, ... plus n - patch so
/// the last rows and columns are always covered.
std::vector<std::size_t> patch_origins(std::size_t n, std::size_t patch, std::size_t stride);

/// Occlusion sensitivity. Every patch on the stride grid is replaced by the
/// baseline value and the drop in target-class probability (clamped at zero)
/// is credited to each covered cell. Cells average their credits over the
/// patches covering them; the map is then scaled so its maximum is 1.
SaliencyMap occlusion_saliency(const NetworkSpec& spec, std::span<const float> genome, const AdjacencyMatrix& input,
                               const OcclusionConfig& cfg, std::size_t threads = 1);

enum class SaliencyFormat { Csv, Pgm, Svg };

/// csv: same layout as matrix files; pgm: binary 8-bit grayscale with
/// value round(255 * s); svg: heatmap grid.
void export_saliency(const SaliencyMap& map, const std::filesystem::path& path, SaliencyFormat format);

} // namespace dnefc
