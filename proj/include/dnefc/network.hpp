#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dnefc/adjacency.hpp"
#include "dnefc/tensor.hpp"

namespace dnefc {

struct Conv2D {
    std::size_t in_channels = 1;
    std::size_t out_channels = 32;
    std::size_t kernel = 3;
    std::size_t stride = 2;
    std::size_t padding = 1;
    Activation activation = Activation::ReLU;
    bool operator==(const Conv2D&) const = default;
};

struct Dense {
    std::size_t in_features = 0;
    std::size_t out_features = 0;
    Activation activation = Activation::None;
    bool operator==(const Dense&) const = default;
};

struct Flatten {
    bool operator==(const Flatten&) const = default;
};

struct Softmax {
    bool operator==(const Softmax&) const = default;
};

using LayerSpec = std::variant<Conv2D, Dense, Flatten, Softmax>;

struct InputShape {
    std::size_t height = 105;
    std::size_t width = 105;
    std::size_t channels = 1;
    bool operator==(const InputShape&) const = default;
};

/// Location of one layer's parameters inside the flat genome: the weights
/// followed by the biases.
struct LayerSegment {
    std::size_t start = 0;
    std::size_t length = 0;
    std::size_t weight_count = 0;
    bool operator==(const LayerSegment&) const = default;
};

/// Validated architecture. Construction walks the layer list once, checking
/// that each layer accepts the previous layer's output shape, and records the
/// activation shape after every layer and the parameter layout.
class NetworkSpec {
public:
    static NetworkSpec create(InputShape input, std::vector<LayerSpec> layers);

    const InputShape& input_shape() const noexcept { return input_; }
    const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
    /// Output shape of layer i.
    const std::vector<Shape>& output_shapes() const noexcept { return shapes_; }
    const std::vector<LayerSegment>& segments() const noexcept { return segments_; }
    std::size_t param_count() const noexcept { return param_count_; }

    nlohmann::json to_json() const;
    static NetworkSpec from_json(const nlohmann::json& j);

    bool operator==(const NetworkSpec& other) const noexcept {
        return input_ == other.input_ && layers_ == other.layers_;
    }

private:
    NetworkSpec() = default;

    InputShape input_;
    std::vector<LayerSpec> layers_;
    std::vector<Shape> shapes_;
    std::vector<LayerSegment> segments_;
    std::size_t param_count_ = 0;
};

/// Four stride-2 conv/ReLU layers with 32 channels, then SELU dense layers of
/// 512, 256 and 128 units and a 2-way softmax head.
NetworkSpec default_spec(std::size_t n = 105);

/// Two conv layers and one hidden dense layer, for small inputs and fast runs.
NetworkSpec compact_spec(std::size_t n, std::size_t hidden = 64);

std::size_t param_count(const NetworkSpec& spec) noexcept;

/// Every parameter is a multiple of this quantum. Sums and differences of
/// lattice values stay exact in float32 while magnitudes remain below
/// 2^24 * quantum = 64, which keeps mirrored children exactly symmetric.
inline constexpr double kParamQuantum = 0x1.0p-18;
float snap_to_lattice(double value) noexcept;

struct FlatGenome {
    std::vector<float> values;
    std::vector<LayerSegment> offsets;

    FlatGenome() = default;
    FlatGenome(const NetworkSpec& spec, std::vector<float> values);

    std::size_t param_count() const noexcept { return values.size(); }
    std::span<const float> view() const noexcept { return values; }

    bool operator==(const FlatGenome&) const = default;
};

/// One layer's parameters as tensors: conv kernels are (k, k, in, out),
/// dense matrices are (in, out).
struct LayerParams {
    Tensor weights;
    Tensor biases;
};

std::vector<LayerParams> unpack(const NetworkSpec& spec, const FlatGenome& genome);
FlatGenome pack(const NetworkSpec& spec, const std::vector<LayerParams>& params);

/// Uniform Glorot: U(-L, L) with L = sqrt(6 / (fan_in + fan_out)), zero
/// biases. Conv fans count the receptive field (k*k*in, k*k*out).
FlatGenome glorot_init(const NetworkSpec& spec, std::uint64_t seed);
double glorot_limit(const LayerSpec& layer);

Tensor as_input(const NetworkSpec& spec, const AdjacencyMatrix& m);

OutputProbabilities forward(const NetworkSpec& spec, std::span<const float> params, const Tensor& input);
OutputProbabilities forward(const NetworkSpec& spec, std::span<const float> params, const AdjacencyMatrix& m);
inline OutputProbabilities forward(const NetworkSpec& spec, const FlatGenome& g, const AdjacencyMatrix& m) {
    return forward(spec, g.view(), m);
}

// Genome file: 8-byte magic "DNEW0001" then param_count little-endian float32.
inline constexpr char kGenomeMagic[9] = "DNEW0001";

void write_genome_payload(std::ostream& out, std::span<const float> values);
std::vector<float> read_genome_payload(std::istream& in, std::size_t count);
void save_genome(const std::filesystem::path& path, const FlatGenome& genome);
FlatGenome load_genome(const std::filesystem::path& path, const NetworkSpec& spec);

NetworkSpec load_spec(const std::filesystem::path& path);
void save_spec(const std::filesystem::path& path, const NetworkSpec& spec);

std::string describe(const NetworkSpec& spec);

} // namespace dnefc
