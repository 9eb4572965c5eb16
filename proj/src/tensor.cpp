#include "dnefc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "dnefc/errors.hpp"

namespace dnefc {

Label label_from_index(long long v) {
    if (v == 0) return Label::LGG;
    if (v == 1) return Label::HGG;
    throw ValidationError("label must be 0 (LGG) or 1 (HGG), got " + std::to_string(v));
}

std::string_view label_name(Label l) noexcept { return l == Label::LGG ? "LGG" : "HGG"; }

std::size_t shape_size(const Shape& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_to_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0f) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
        throw ValidationError("tensor shape " + shape_to_string(shape_) + " does not match " +
                              std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::reshaped(Shape shape) && {
    return Tensor(std::move(shape), std::move(data_));
}

float relu(float x) noexcept { return x > 0.0f ? x : 0.0f; }

float selu(float x) noexcept {
    return x > 0.0f ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
}

void activation_apply_inplace(std::span<float> values, Activation kind) noexcept {
    switch (kind) {
    case Activation::None: break;
    case Activation::ReLU:
        for (float& v : values) v = relu(v);
        break;
    case Activation::SELU:
        for (float& v : values) v = selu(v);
        break;
    }
}

Tensor activation_apply(Tensor t, Activation kind) {
    activation_apply_inplace(t.data(), kind);
    return t;
}

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride, std::size_t padding) {
    if (kernel == 0 || stride == 0) throw ValidationError("convolution kernel and stride must be positive");
    if (extent + 2 * padding < kernel) {
        throw ValidationError("convolution kernel " + std::to_string(kernel) + " exceeds padded extent " +
                              std::to_string(extent + 2 * padding));
    }
    return (extent + 2 * padding - kernel) / stride + 1;
}

namespace {

struct ConvGeometry {
    std::size_t height, width, cin, k, stride, padding, out_h, out_w;
};

// Eight-lane float vector (GCC/Clang extension). Accumulators for a whole
// output pixel live in registers; each lane still sums its taps in the same
// (ky, kx, c) order as the scalar path.
using Lane8 = float __attribute__((vector_size(32)));

inline Lane8 load8(const float* p) noexcept {
    Lane8 v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

template <std::size_t kBlocks>
void conv_kernel_vec(const ConvGeometry& g, const float* in, const ConvWeights& w, float* dst) {
    constexpr std::size_t cout = kBlocks * 8;
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            Lane8 acc[kBlocks] = {};
            for (std::size_t ky = 0; ky < g.k; ++ky) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.padding);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) continue;
                for (std::size_t kx = 0; kx < g.k; ++kx) {
                    const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.padding);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width)) continue;
                    const float* px = in + (static_cast<std::size_t>(iy) * g.width + static_cast<std::size_t>(ix)) * g.cin;
                    const float* wk = w.kernel.data() + (ky * g.k + kx) * g.cin * cout;
                    for (std::size_t c = 0; c < g.cin; ++c) {
                        const Lane8 xv = Lane8{} + px[c];
                        const float* wc = wk + c * cout;
                        for (std::size_t blk = 0; blk < kBlocks; ++blk) acc[blk] += xv * load8(wc + blk * 8);
                    }
                }
            }
            float* o = dst + (oy * g.out_w + ox) * cout;
            for (std::size_t blk = 0; blk < kBlocks; ++blk) {
                const Lane8 r = acc[blk] + load8(w.bias.data() + blk * 8);
                std::memcpy(o + blk * 8, &r, sizeof r);
            }
        }
    }
}

void conv_kernel_scalar(const ConvGeometry& g, const float* in, const ConvWeights& w, float* dst) {
    const std::size_t cout = w.out_channels;
    std::vector<float> acc(cout);
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            std::fill(acc.begin(), acc.end(), 0.0f);
            for (std::size_t ky = 0; ky < g.k; ++ky) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.padding);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) continue;
                for (std::size_t kx = 0; kx < g.k; ++kx) {
                    const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.padding);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width)) continue;
                    const float* px = in + (static_cast<std::size_t>(iy) * g.width + static_cast<std::size_t>(ix)) * g.cin;
                    const float* wk = w.kernel.data() + (ky * g.k + kx) * g.cin * cout;
                    for (std::size_t c = 0; c < g.cin; ++c) {
                        const float xv = px[c];
                        const float* wc = wk + c * cout;
                        for (std::size_t co = 0; co < cout; ++co) acc[co] += xv * wc[co];
                    }
                }
            }
            float* o = dst + (oy * g.out_w + ox) * cout;
            for (std::size_t co = 0; co < cout; ++co) o[co] = acc[co] + w.bias[co];
        }
    }
}

} // namespace

Tensor conv2d_forward(const Tensor& input, const ConvWeights& w, std::size_t stride, std::size_t padding,
                      Activation activation) {
    if (input.rank() != 3) throw ValidationError("conv2d expects an (H, W, C) tensor, got " + shape_to_string(input.shape()));
    const std::size_t height = input.shape()[0];
    const std::size_t width = input.shape()[1];
    const std::size_t cin = input.shape()[2];
    const std::size_t k = w.kernel_size;
    const std::size_t cout = w.out_channels;
    if (cin != w.in_channels) {
        throw ValidationError("conv2d input has " + std::to_string(cin) + " channels, kernel bank expects " +
                              std::to_string(w.in_channels));
    }
    if (w.kernel.size() != k * k * cin * cout || w.bias.size() != cout) {
        throw ValidationError("conv2d kernel bank size does not match its declared geometry");
    }
    const std::size_t out_h = conv_output_extent(height, k, stride, padding);
    const std::size_t out_w = conv_output_extent(width, k, stride, padding);

    Tensor out({out_h, out_w, cout});
    const ConvGeometry geo{height, width, cin, k, stride, padding, out_h, out_w};
    const float* src = input.data().data();
    float* dst = out.data().data();
    switch (cout) {
    case 8: conv_kernel_vec<1>(geo, src, w, dst); break;
    case 16: conv_kernel_vec<2>(geo, src, w, dst); break;
    case 32: conv_kernel_vec<4>(geo, src, w, dst); break;
    case 64: conv_kernel_vec<8>(geo, src, w, dst); break;
    default: conv_kernel_scalar(geo, src, w, dst); break;
    }
    activation_apply_inplace(out.data(), activation);
    return out;
}

std::vector<float> dense_forward(std::span<const float> x, const DenseWeights& w, Activation activation) {
    if (x.size() != w.in_features) {
        throw ValidationError("dense layer expects " + std::to_string(w.in_features) + " inputs, got " +
                              std::to_string(x.size()));
    }
    if (w.matrix.size() != w.in_features * w.out_features || w.bias.size() != w.out_features) {
        throw ValidationError("dense weight matrix size does not match its declared geometry");
    }
    const std::size_t n_out = w.out_features;
    std::vector<float> y(n_out, 0.0f);
    float* acc = y.data();
    const float* m = w.matrix.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float xv = x[i];
        if (xv == 0.0f) continue;
        const float* row = m + i * n_out;
        for (std::size_t o = 0; o < n_out; ++o) acc[o] += xv * row[o];
    }
    for (std::size_t o = 0; o < n_out; ++o) acc[o] += w.bias[o];
    activation_apply_inplace(y, activation);
    return y;
}

OutputProbabilities softmax(std::span<const float> logits) {
    if (logits.size() != 2) {
        throw ValidationError("softmax output must have exactly 2 logits, got " + std::to_string(logits.size()));
    }
    const double z0 = logits[0];
    const double z1 = logits[1];
    const double top = std::max(z0, z1);
    const double e0 = std::exp(z0 - top);
    const double e1 = std::exp(z1 - top);
    const double total = e0 + e1;
    return OutputProbabilities{{e0 / total, e1 / total}};
}

Label predict(const OutputProbabilities& out) noexcept {
    return out.p[1] > out.p[0] ? Label::HGG : Label::LGG;
}

} // namespace dnefc
