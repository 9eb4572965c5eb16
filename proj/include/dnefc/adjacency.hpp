#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dnefc {

enum class Label : std::uint8_t { LGG = 0, HGG = 1 };

inline constexpr int label_index(Label l) noexcept { return static_cast<int>(l); }
Label label_from_index(long long v);
std::string_view label_name(Label l) noexcept;

/// Preprocessed n x n connectivity image fed to the network as a 1-channel
/// input. Entries lie in [0, 1].
struct AdjacencyMatrix {
    std::string id;
    Label label = Label::LGG;
    std::size_t n = 0;
    std::vector<float> values; // row-major n * n

    float at(std::size_t row, std::size_t col) const noexcept { return values[row * n + col]; }
};

} // namespace dnefc
