#include "dnefc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dnefc/connectome.hpp"
#include "dnefc/errors.hpp"
#include "dnefc/philox.hpp"

namespace dnefc {

namespace {
constexpr std::uint32_t kTemplateDomain = 3;
constexpr std::uint32_t kSubjectDomain = 4;
} // namespace

void SynthConfig::validate() const {
    if (n_rois < 4) throw ValidationError("n_rois must be at least 4");
    if (community_count < 2 || community_count > n_rois) {
        throw ValidationError("community_count must lie in [2, n_rois]");
    }
    if (!(separability >= 0.0 && separability <= 1.0)) throw ValidationError("separability must lie in [0, 1]");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ValidationError("noise_sigma must be >= 0");
    if (n_per_class_train == 0) throw ValidationError("n_per_class_train must be positive");
}

nlohmann::json SynthConfig::to_json() const {
    return {{"n_rois", n_rois},
            {"n_per_class_train", n_per_class_train},
            {"n_per_class_test", n_per_class_test},
            {"community_count", community_count},
            {"separability", separability},
            {"noise_sigma", noise_sigma},
            {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
    SynthConfig c;
    try {
        c.n_rois = j.value("n_rois", c.n_rois);
        c.n_per_class_train = j.value("n_per_class_train", c.n_per_class_train);
        c.n_per_class_test = j.value("n_per_class_test", c.n_per_class_test);
        c.community_count = j.value("community_count", c.community_count);
        c.separability = j.value("separability", c.separability);
        c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed synth config: ") + e.what());
    }
    return c;
}

ClassTemplates make_templates(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n_rois;
    const std::size_t k = cfg.community_count;
    ClassTemplates t;
    t.membership[0].resize(n);
    for (std::size_t i = 0; i < n; ++i) t.membership[0][i] = i * k / n;
    t.membership[1] = t.membership[0];

    StreamReader rng(CounterStream(cfg.seed, CounterStream::make_id(kTemplateDomain, 0, 0)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    const auto markers = static_cast<std::size_t>(std::llround(cfg.separability * static_cast<double>(n)));
    t.marker_rois.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(markers));
    std::sort(t.marker_rois.begin(), t.marker_rois.end());
    for (const std::size_t roi : t.marker_rois) {
        t.membership[1][roi] = (t.membership[0][roi] + 1 + rng.below(k - 1)) % k;
    }
    return t;
}

AdjacencyMatrix generate_subject(const SynthConfig& cfg, const ClassTemplates& templates, Label label,
                                 std::uint32_t subject_index, std::string id) {
    const std::size_t n = cfg.n_rois;
    const auto& member = templates.membership[label_index(label)];
    StreamReader rng(CounterStream(cfg.seed, CounterStream::make_id(kSubjectDomain, subject_index, 0)));
    std::vector<double> raw(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double base = member[i] == member[j] ? 1.0 : 0.0;
            const double noise = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.normal() : 0.0;
            raw[i * n + j] = raw[j * n + i] = base + noise;
        }
    }
    const auto scaled = scale_and_threshold(raw);
    AdjacencyMatrix m{std::move(id), label, n, std::vector<float>(n * n)};
    std::transform(scaled.begin(), scaled.end(), m.values.begin(), [](double v) { return static_cast<float>(v); });
    return m;
}

Dataset generate_synthetic_dataset(const SynthConfig& cfg) {
    const auto templates = make_templates(cfg);
    Dataset d;
    std::uint32_t subject = 0;
    const auto fill = [&](std::vector<AdjacencyMatrix>& out, std::string_view split, std::size_t per_class) {
        for (const Label label : {Label::LGG, Label::HGG}) {
            for (std::size_t i = 0; i < per_class; ++i) {
                char suffix[24];
                std::snprintf(suffix, sizeof suffix, "%03zu", i);
                std::string id = std::string(split) + "_" + (label == Label::LGG ? "lgg" : "hgg") + "_" + suffix;
                out.push_back(generate_subject(cfg, templates, label, subject++, std::move(id)));
            }
        }
    };
    fill(d.train, "train", cfg.n_per_class_train);
    fill(d.test, "test", cfg.n_per_class_test);
    return d;
}

double mean_intensity(const AdjacencyMatrix& m) noexcept {
    double s = 0.0;
    for (const float v : m.values) s += v;
    return m.values.empty() ? 0.0 : s / static_cast<double>(m.values.size());
}

} // namespace dnefc
