#include "dnefc/network.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dnefc/errors.hpp"
#include "dnefc/philox.hpp"

namespace dnefc {

static_assert(std::endian::native == std::endian::little, "genome files are written in host byte order");

namespace {

constexpr std::uint32_t kInitDomain = 1;

std::string_view activation_name(Activation a) {
    switch (a) {
    case Activation::None: return "none";
    case Activation::ReLU: return "relu";
    case Activation::SELU: return "selu";
    }
    return "none";
}

Activation activation_from(const std::string& s) {
    if (s == "none") return Activation::None;
    if (s == "relu") return Activation::ReLU;
    if (s == "selu") return Activation::SELU;
    throw ValidationError("unknown activation '" + s + "'");
}

struct LayerShape {
    Shape out;
    std::size_t weights = 0;
    std::size_t biases = 0;
};

LayerShape infer(const LayerSpec& layer, const Shape& in, std::size_t index) {
    const auto where = [&] { return "layer " + std::to_string(index) + ": "; };
    return std::visit(
        [&](const auto& l) -> LayerShape {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Conv2D>) {
                if (l.kernel == 0 || l.stride == 0 || l.padding == 0 || l.out_channels == 0 || l.in_channels == 0) {
                    throw ValidationError(where() + "conv kernel, stride, padding and channels must be positive");
                }
                if (in.size() != 3) throw ValidationError(where() + "conv expects (H, W, C), got " + shape_to_string(in));
                if (in[2] != l.in_channels) {
                    throw ValidationError(where() + "conv declares " + std::to_string(l.in_channels) +
                                          " input channels but receives " + std::to_string(in[2]));
                }
                const auto h = conv_output_extent(in[0], l.kernel, l.stride, l.padding);
                const auto w = conv_output_extent(in[1], l.kernel, l.stride, l.padding);
                return {{h, w, l.out_channels}, l.kernel * l.kernel * l.in_channels * l.out_channels, l.out_channels};
            } else if constexpr (std::is_same_v<T, Dense>) {
                if (l.in_features == 0 || l.out_features == 0) throw ValidationError(where() + "dense sizes must be positive");
                if (in.size() != 1 || in[0] != l.in_features) {
                    throw ValidationError(where() + "dense declares " + std::to_string(l.in_features) +
                                          " inputs but receives " + shape_to_string(in));
                }
                return {{l.out_features}, l.in_features * l.out_features, l.out_features};
            } else if constexpr (std::is_same_v<T, Flatten>) {
                return {{shape_size(in)}, 0, 0};
            } else {
                if (in.size() != 1) throw ValidationError(where() + "softmax expects a flat logit vector");
                return {in, 0, 0};
            }
        },
        layer);
}

} // namespace

NetworkSpec NetworkSpec::create(InputShape input, std::vector<LayerSpec> layers) {
    if (input.height == 0 || input.width == 0 || input.channels == 0) {
        throw ValidationError("input shape must be positive in every dimension");
    }
    if (layers.empty() || !std::holds_alternative<Softmax>(layers.back())) {
        throw ValidationError("network must end with a softmax layer");
    }
    NetworkSpec spec;
    spec.input_ = input;
    Shape current{input.height, input.width, input.channels};
    std::size_t offset = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (std::holds_alternative<Softmax>(layers[i]) && i + 1 != layers.size()) {
            throw ValidationError("softmax may only appear as the final layer");
        }
        auto ls = infer(layers[i], current, i);
        current = ls.out;
        spec.shapes_.push_back(current);
        spec.segments_.push_back({offset, ls.weights + ls.biases, ls.weights});
        offset += ls.weights + ls.biases;
    }
    if (current != Shape{2}) {
        throw ValidationError("network output must be exactly 2 class probabilities, got " + shape_to_string(current));
    }
    spec.layers_ = std::move(layers);
    spec.param_count_ = offset;
    return spec;
}

nlohmann::json NetworkSpec::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : layers_) {
        std::visit(
            [&](const auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, Conv2D>) {
                    layers.push_back({{"type", "conv2d"},
                                      {"in_channels", l.in_channels},
                                      {"out_channels", l.out_channels},
                                      {"kernel", l.kernel},
                                      {"stride", l.stride},
                                      {"padding", l.padding},
                                      {"activation", activation_name(l.activation)}});
                } else if constexpr (std::is_same_v<T, Dense>) {
                    layers.push_back({{"type", "dense"},
                                      {"in_features", l.in_features},
                                      {"out_features", l.out_features},
                                      {"activation", activation_name(l.activation)}});
                } else if constexpr (std::is_same_v<T, Flatten>) {
                    layers.push_back({{"type", "flatten"}});
                } else {
                    layers.push_back({{"type", "softmax"}});
                }
            },
            layer);
    }
    return {{"input_shape", {input_.height, input_.width, input_.channels}}, {"layers", layers}};
}

NetworkSpec NetworkSpec::from_json(const nlohmann::json& j) {
    try {
        const auto& shape = j.at("input_shape");
        if (!shape.is_array() || shape.size() != 3) throw ValidationError("input_shape must be [height, width, channels]");
        InputShape input{shape[0].get<std::size_t>(), shape[1].get<std::size_t>(), shape[2].get<std::size_t>()};
        std::vector<LayerSpec> layers;
        for (const auto& l : j.at("layers")) {
            const auto type = l.at("type").get<std::string>();
            if (type == "conv2d") {
                layers.emplace_back(Conv2D{l.at("in_channels").get<std::size_t>(), l.at("out_channels").get<std::size_t>(),
                                           l.value("kernel", std::size_t{3}), l.value("stride", std::size_t{2}),
                                           l.value("padding", std::size_t{1}),
                                           activation_from(l.value("activation", std::string("relu")))});
            } else if (type == "dense") {
                layers.emplace_back(Dense{l.at("in_features").get<std::size_t>(), l.at("out_features").get<std::size_t>(),
                                          activation_from(l.value("activation", std::string("none")))});
            } else if (type == "flatten") {
                layers.emplace_back(Flatten{});
            } else if (type == "softmax") {
                layers.emplace_back(Softmax{});
            } else {
                throw ValidationError("unknown layer type '" + type + "'");
            }
        }
        return create(input, std::move(layers));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed network spec: ") + e.what());
    }
}

NetworkSpec default_spec(std::size_t n) {
    std::vector<LayerSpec> layers;
    std::size_t extent = n;
    std::size_t channels = 1;
    for (int i = 0; i < 4; ++i) {
        layers.emplace_back(Conv2D{channels, 32, 3, 2, 1, Activation::ReLU});
        extent = conv_output_extent(extent, 3, 2, 1);
        channels = 32;
    }
    const std::size_t flat = extent * extent * channels;
    layers.emplace_back(Flatten{});
    layers.emplace_back(Dense{flat, 512, Activation::SELU});
    layers.emplace_back(Dense{512, 256, Activation::SELU});
    layers.emplace_back(Dense{256, 128, Activation::SELU});
    layers.emplace_back(Dense{128, 2, Activation::None});
    layers.emplace_back(Softmax{});
    return NetworkSpec::create({n, n, 1}, std::move(layers));
}

NetworkSpec compact_spec(std::size_t n, std::size_t hidden) {
    const std::size_t e1 = conv_output_extent(n, 3, 2, 1);
    const std::size_t e2 = conv_output_extent(e1, 3, 2, 1);
    return NetworkSpec::create({n, n, 1}, {Conv2D{1, 32, 3, 2, 1, Activation::ReLU},
                                           Conv2D{32, 32, 3, 2, 1, Activation::ReLU}, Flatten{},
                                           Dense{e2 * e2 * 32, hidden, Activation::SELU},
                                           Dense{hidden, 2, Activation::None}, Softmax{}});
}

std::size_t param_count(const NetworkSpec& spec) noexcept { return spec.param_count(); }

float snap_to_lattice(double value) noexcept {
    return static_cast<float>(std::nearbyint(value / kParamQuantum) * kParamQuantum);
}

FlatGenome::FlatGenome(const NetworkSpec& spec, std::vector<float> v) : values(std::move(v)), offsets(spec.segments()) {
    if (values.size() != spec.param_count()) {
        throw ValidationError("genome has " + std::to_string(values.size()) + " parameters, network expects " +
                              std::to_string(spec.param_count()));
    }
}

std::vector<LayerParams> unpack(const NetworkSpec& spec, const FlatGenome& genome) {
    if (genome.param_count() != spec.param_count()) throw ValidationError("genome does not match network spec");
    std::vector<LayerParams> out;
    for (std::size_t i = 0; i < spec.layers().size(); ++i) {
        const auto& seg = spec.segments()[i];
        const auto begin = genome.values.begin() + static_cast<std::ptrdiff_t>(seg.start);
        const auto mid = begin + static_cast<std::ptrdiff_t>(seg.weight_count);
        const auto end = begin + static_cast<std::ptrdiff_t>(seg.length);
        Shape wshape;
        Shape bshape{seg.length - seg.weight_count};
        if (const auto* c = std::get_if<Conv2D>(&spec.layers()[i])) {
            wshape = {c->kernel, c->kernel, c->in_channels, c->out_channels};
        } else if (const auto* d = std::get_if<Dense>(&spec.layers()[i])) {
            wshape = {d->in_features, d->out_features};
        } else {
            wshape = {0};
        }
        out.push_back({Tensor(wshape, std::vector<float>(begin, mid)), Tensor(bshape, std::vector<float>(mid, end))});
    }
    return out;
}

FlatGenome pack(const NetworkSpec& spec, const std::vector<LayerParams>& params) {
    if (params.size() != spec.layers().size()) throw ValidationError("one parameter set per layer is required");
    std::vector<float> values;
    values.reserve(spec.param_count());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& seg = spec.segments()[i];
        if (params[i].weights.size() != seg.weight_count || params[i].biases.size() != seg.length - seg.weight_count) {
            throw ValidationError("layer " + std::to_string(i) + " parameter tensors do not match the spec");
        }
        values.insert(values.end(), params[i].weights.data().begin(), params[i].weights.data().end());
        values.insert(values.end(), params[i].biases.data().begin(), params[i].biases.data().end());
    }
    return FlatGenome(spec, std::move(values));
}

double glorot_limit(const LayerSpec& layer) {
    if (const auto* c = std::get_if<Conv2D>(&layer)) {
        const double field = static_cast<double>(c->kernel * c->kernel);
        return std::sqrt(6.0 / (field * static_cast<double>(c->in_channels) + field * static_cast<double>(c->out_channels)));
    }
    if (const auto* d = std::get_if<Dense>(&layer)) {
        return std::sqrt(6.0 / static_cast<double>(d->in_features + d->out_features));
    }
    return 0.0;
}

FlatGenome glorot_init(const NetworkSpec& spec, std::uint64_t seed) {
    std::vector<float> values(spec.param_count(), 0.0f);
    for (std::size_t i = 0; i < spec.layers().size(); ++i) {
        const auto& seg = spec.segments()[i];
        if (seg.weight_count == 0) continue;
        const double limit = glorot_limit(spec.layers()[i]);
        const CounterStream stream(seed, CounterStream::make_id(kInitDomain, static_cast<std::uint32_t>(i), 0));
        for (std::size_t k = 0; k < seg.weight_count; k += 2) {
            const auto b = stream.block(k / 2);
            values[seg.start + k] = snap_to_lattice((2.0 * uniform_closed0(b[0], b[1]) - 1.0) * limit);
            if (k + 1 < seg.weight_count) {
                values[seg.start + k + 1] = snap_to_lattice((2.0 * uniform_closed0(b[2], b[3]) - 1.0) * limit);
            }
        }
    }
    return FlatGenome(spec, std::move(values));
}

Tensor as_input(const NetworkSpec& spec, const AdjacencyMatrix& m) {
    const auto& in = spec.input_shape();
    if (in.channels != 1 || in.height != m.n || in.width != m.n || m.values.size() != m.n * m.n) {
        throw ValidationError("matrix '" + m.id + "' is " + std::to_string(m.n) + "x" + std::to_string(m.n) +
                              ", network expects " + std::to_string(in.height) + "x" + std::to_string(in.width) + "x" +
                              std::to_string(in.channels));
    }
    return Tensor({m.n, m.n, 1}, m.values);
}

OutputProbabilities forward(const NetworkSpec& spec, std::span<const float> params, const Tensor& input) {
    if (params.size() != spec.param_count()) {
        throw ValidationError("genome has " + std::to_string(params.size()) + " parameters, network expects " +
                              std::to_string(spec.param_count()));
    }
    const auto& in = spec.input_shape();
    if (input.shape() != Shape{in.height, in.width, in.channels}) {
        throw ValidationError("input tensor " + shape_to_string(input.shape()) + " does not match network input");
    }
    Tensor current = input;
    std::vector<float> flat;
    bool is_flat = false;
    for (std::size_t i = 0; i < spec.layers().size(); ++i) {
        const auto& seg = spec.segments()[i];
        const auto weights = params.subspan(seg.start, seg.weight_count);
        const auto biases = params.subspan(seg.start + seg.weight_count, seg.length - seg.weight_count);
        const auto& layer = spec.layers()[i];
        if (const auto* c = std::get_if<Conv2D>(&layer)) {
            current = conv2d_forward(current, {weights, biases, c->kernel, c->in_channels, c->out_channels}, c->stride,
                                     c->padding, c->activation);
        } else if (const auto* d = std::get_if<Dense>(&layer)) {
            if (!is_flat) throw InvariantError("dense layer reached without a flat input");
            flat = dense_forward(flat, {weights, biases, d->in_features, d->out_features}, d->activation);
        } else if (std::holds_alternative<Flatten>(layer)) {
            if (!is_flat) {
                const auto d = current.data();
                flat.assign(d.begin(), d.end());
                is_flat = true;
            }
        } else {
            return softmax(flat);
        }
    }
    throw InvariantError("network spec has no softmax head");
}

OutputProbabilities forward(const NetworkSpec& spec, std::span<const float> params, const AdjacencyMatrix& m) {
    return forward(spec, params, as_input(spec, m));
}

void write_genome_payload(std::ostream& out, std::span<const float> values) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
}

std::vector<float> read_genome_payload(std::istream& in, std::size_t count) {
    std::vector<float> values(count);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float)) {
        throw FormatError("genome payload truncated: expected " + std::to_string(count) + " floats");
    }
    return values;
}

void save_genome(const std::filesystem::path& path, const FlatGenome& genome) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kGenomeMagic, 8);
    write_genome_payload(out, genome.values);
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

FlatGenome load_genome(const std::filesystem::path& path, const NetworkSpec& spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || std::string_view(magic, 8) != std::string_view(kGenomeMagic, 8)) {
        throw FormatError(path.string() + ": not a genome file (bad magic)");
    }
    const auto size = std::filesystem::file_size(path);
    if (size != 8 + spec.param_count() * sizeof(float)) {
        throw FormatError(path.string() + ": genome holds " + std::to_string((size - 8) / sizeof(float)) +
                          " floats, network expects " + std::to_string(spec.param_count()));
    }
    return FlatGenome(spec, read_genome_payload(in, spec.param_count()));
}

NetworkSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return NetworkSpec::from_json(j);
}

void save_spec(const std::filesystem::path& path, const NetworkSpec& spec) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << spec.to_json().dump(2) << '\n';
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

std::string describe(const NetworkSpec& spec) {
    std::ostringstream os;
    const auto& in = spec.input_shape();
    os << "input (" << in.height << ", " << in.width << ", " << in.channels << ")\n";
    for (std::size_t i = 0; i < spec.layers().size(); ++i) {
        std::visit(
            [&](const auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, Conv2D>) {
                    os << "conv2d " << l.in_channels << "->" << l.out_channels << " k" << l.kernel << " s" << l.stride
                       << " p" << l.padding << ' ' << activation_name(l.activation);
                } else if constexpr (std::is_same_v<T, Dense>) {
                    os << "dense " << l.in_features << "->" << l.out_features << ' ' << activation_name(l.activation);
                } else if constexpr (std::is_same_v<T, Flatten>) {
                    os << "flatten";
                } else {
                    os << "softmax";
                }
            },
            spec.layers()[i]);
        os << "  -> " << shape_to_string(spec.output_shapes()[i]) << "  params " << spec.segments()[i].length << '\n';
    }
    os << "total params " << spec.param_count() << '\n';
    return os.str();
}

} // namespace dnefc
