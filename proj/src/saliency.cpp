#include "dnefc/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dnefc/dataset.hpp"
#include "dnefc/errors.hpp"
#include "dnefc/parallel.hpp"

namespace dnefc {

void OcclusionConfig::validate(std::size_t n) const {
    if (patch_size < 1 || patch_size > n) {
        throw ValidationError("patch_size must lie in [1, " + std::to_string(n) + "]");
    }
    if (stride < 1 || stride > patch_size) throw ValidationError("stride must lie in [1, patch_size]");
    if (!std::isfinite(baseline)) throw ValidationError("baseline must be finite");
}

std::vector<std::size_t> patch_origins(std::size_t n, std::size_t patch, std::size_t stride) {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p + patch <= n; p += stride) out.push_back(p);
    if (out.empty() || out.back() + patch < n) out.push_back(n - patch);
    return out;
}

SaliencyMap occlusion_saliency(const NetworkSpec& spec, std::span<const float> genome, const AdjacencyMatrix& input,
                               const OcclusionConfig& cfg, std::size_t threads) {
    const std::size_t n = input.n;
    cfg.validate(n);
    const Tensor base = as_input(spec, input);
    const auto reference = forward(spec, genome, base);
    const Label target = cfg.target.value_or(predict(reference));
    const double p_ref = reference.p[label_index(target)];

    const auto origins = patch_origins(n, cfg.patch_size, cfg.stride);
    const std::size_t per_axis = origins.size();
    std::vector<double> drops(per_axis * per_axis);
    parallel_for(drops.size(), threads, [&](std::size_t idx, std::size_t) {
        const std::size_t y0 = origins[idx / per_axis];
        const std::size_t x0 = origins[idx % per_axis];
        Tensor occluded = base;
        for (std::size_t y = y0; y < y0 + cfg.patch_size; ++y) {
            for (std::size_t x = x0; x < x0 + cfg.patch_size; ++x) occluded[y * n + x] = cfg.baseline;
        }
        const double p = forward(spec, genome, occluded).p[label_index(target)];
        drops[idx] = std::max(0.0, p_ref - p);
    });

    std::vector<double> credit(n * n, 0.0);
    std::vector<std::size_t> coverage(n * n, 0);
    for (std::size_t idx = 0; idx < drops.size(); ++idx) {
        const std::size_t y0 = origins[idx / per_axis];
        const std::size_t x0 = origins[idx % per_axis];
        for (std::size_t y = y0; y < y0 + cfg.patch_size; ++y) {
            for (std::size_t x = x0; x < x0 + cfg.patch_size; ++x) {
                credit[y * n + x] += drops[idx];
                ++coverage[y * n + x];
            }
        }
    }
    double top = 0.0;
    for (std::size_t i = 0; i < credit.size(); ++i) {
        credit[i] /= static_cast<double>(coverage[i]);
        top = std::max(top, credit[i]);
    }
    SaliencyMap map{n, std::vector<float>(n * n, 0.0f), input.id, target};
    if (top > 0.0) {
        for (std::size_t i = 0; i < credit.size(); ++i) map.values[i] = static_cast<float>(credit[i] / top);
    }
    return map;
}

namespace {

// Black -> red -> yellow -> white.
std::string heat_color(float s) {
    const double t = std::clamp(static_cast<double>(s), 0.0, 1.0) * 3.0;
    const auto channel = [](double v) { return static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))); };
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", channel(t), channel(t - 1.0), channel(t - 2.0));
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

void write_pgm(const SaliencyMap& map, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << map.n << ' ' << map.n << "\n255\n";
    std::string pixels(map.values.size(), '\0');
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        pixels[i] = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::clamp(map.values[i], 0.0f, 1.0f))));
    }
    out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

void write_svg(const SaliencyMap& map, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    constexpr int cell = 4;
    const std::size_t side = map.n * cell;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << side << "\" height=\"" << side + 24
        << "\" shape-rendering=\"crispEdges\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"#000000\"/>\n";
    for (std::size_t r = 0; r < map.n; ++r) {
        for (std::size_t c = 0; c < map.n; ++c) {
            const float v = map.at(r, c);
            if (v <= 0.0f) continue;
            out << "<rect x=\"" << c * cell << "\" y=\"" << r * cell << "\" width=\"" << cell << "\" height=\"" << cell
                << "\" fill=\"" << heat_color(v) << "\"/>\n";
        }
    }
    out << "<text x=\"4\" y=\"" << side + 16 << "\" fill=\"#ffffff\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(map.input_id) << " target " << label_name(map.target_class) << "</text>\n</svg>\n";
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

} // namespace

void export_saliency(const SaliencyMap& map, const std::filesystem::path& path, SaliencyFormat format) {
    switch (format) {
    case SaliencyFormat::Csv: save_matrix(path, map.n, map.values); break;
    case SaliencyFormat::Pgm: write_pgm(map, path); break;
    case SaliencyFormat::Svg: write_svg(map, path); break;
    }
}

} // namespace dnefc
