#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dnefc/adjacency.hpp"

namespace dnefc {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;
std::string shape_to_string(const Shape& shape);

/// Dense row-major float tensor. Channels-last for image data (H, W, C).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<float> data);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }
    float operator[](std::size_t i) const noexcept { return data_[i]; }
    float& operator[](std::size_t i) noexcept { return data_[i]; }

    /// Same data, new shape of equal size.
    Tensor reshaped(Shape shape) &&;

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    std::vector<float> data_;
};

enum class Activation { None, ReLU, SELU };

inline constexpr float kSeluAlpha = 1.6732632423543772848f;
inline constexpr float kSeluLambda = 1.0507009873554804934f;

float relu(float x) noexcept;
float selu(float x) noexcept;
void activation_apply_inplace(std::span<float> values, Activation kind) noexcept;
Tensor activation_apply(Tensor t, Activation kind);

/// Kernel bank in (ky, kx, in_channel, out_channel) order plus one bias per
/// output channel.
struct ConvWeights {
    std::span<const float> kernel;
    std::span<const float> bias;
    std::size_t kernel_size = 3;
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
};

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride, std::size_t padding);

/// Zero-padded strided 2-D convolution over an (H, W, C) tensor. Each output
/// is accumulated over (ky, kx, c) in ascending order, then the bias is added.
Tensor conv2d_forward(const Tensor& input, const ConvWeights& weights, std::size_t stride, std::size_t padding,
                      Activation activation = Activation::None);

/// Weight matrix stored input-major: element (i, o) at i * out + o.
struct DenseWeights {
    std::span<const float> matrix;
    std::span<const float> bias;
    std::size_t in_features = 0;
    std::size_t out_features = 0;
};

/// y = W x + b. Every output sums its terms in increasing input index, then
/// adds the bias.
std::vector<float> dense_forward(std::span<const float> x, const DenseWeights& weights,
                                 Activation activation = Activation::None);

struct OutputProbabilities {
    std::array<double, 2> p{0.5, 0.5};
};

OutputProbabilities softmax(std::span<const float> logits);

/// Argmax with ties resolved to the lower index.
Label predict(const OutputProbabilities& out) noexcept;

} // namespace dnefc
