#include "dnefc/harness.hpp"

#include <fstream>
#include <ostream>

#include "dnefc/checkpoint.hpp"
#include "dnefc/errors.hpp"
#include "dnefc/metrics.hpp"
#include "dnefc/parallel.hpp"

namespace dnefc {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCheckpointFile = "checkpoint.dnec";

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

void prepare_output_dir(const fs::path& dir, bool force) {
    if (dir.empty()) throw ValidationError("an output directory is required");
    std::error_code ec;
    if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
        throw ValidationError("output directory " + dir.string() + " is not empty (use --force to overwrite)");
    }
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

} // namespace

std::size_t RunConfig::resolved_threads() const noexcept { return threads == 0 ? default_thread_count() : threads; }

nlohmann::json RunConfig::to_json() const {
    return {{"train", train.to_json()},
            {"synth", synth.to_json()},
            {"arch", arch},
            {"spec_path", spec_path},
            {"dataset_dir", dataset_dir},
            {"output_dir", output_dir},
            {"threads", resolved_threads()},
            {"emit_plots", emit_plots},
            {"checkpoint_every", checkpoint_every}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
        if (j.contains("synth")) c.synth = SynthConfig::from_json(j.at("synth"));
        c.arch = j.value("arch", c.arch);
        c.spec_path = j.value("spec_path", c.spec_path);
        c.dataset_dir = j.value("dataset_dir", c.dataset_dir);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.threads = j.value("threads", c.threads);
        c.emit_plots = j.value("emit_plots", c.emit_plots);
        c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed run config: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

Dataset cmd_synth(const RunConfig& cfg, std::ostream& log) {
    cfg.synth.validate();
    prepare_output_dir(cfg.output_dir, cfg.force);
    auto data = generate_synthetic_dataset(cfg.synth);
    write_dataset(cfg.output_dir, data, cfg.synth.to_json());
    write_json(fs::path(cfg.output_dir) / "run_config.json", cfg.to_json());
    log << "wrote " << data.train.size() << " train and " << data.test.size() << " test matrices ("
        << cfg.synth.n_rois << "x" << cfg.synth.n_rois << ") to " << cfg.output_dir << '\n';
    return data;
}

NetworkSpec resolve_spec(const RunConfig& cfg, std::size_t n) {
    NetworkSpec spec = [&] {
        if (!cfg.spec_path.empty()) return load_spec(cfg.spec_path);
        if (cfg.arch == "default") return default_spec(n);
        if (cfg.arch == "compact") return compact_spec(n);
        throw ValidationError("unknown architecture '" + cfg.arch + "' (expected default or compact)");
    }();
    const auto& in = spec.input_shape();
    if (in.height != n || in.width != n || in.channels != 1) {
        throw ValidationError("network input " + std::to_string(in.height) + "x" + std::to_string(in.width) + "x" +
                              std::to_string(in.channels) + " does not match " + std::to_string(n) + "x" +
                              std::to_string(n) + " dataset matrices");
    }
    return spec;
}

TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log) {
    if (cfg.dataset_dir.empty()) throw ValidationError("a dataset directory is required");
    if (cfg.output_dir.empty()) throw ValidationError("an output directory is required");
    const Dataset data = load_dataset(cfg.dataset_dir);
    if (data.train.empty()) throw ValidationError("dataset has no training matrices");
    const fs::path out_dir = cfg.output_dir;
    const fs::path ckpt_path = out_dir / kCheckpointFile;
    const fs::path metrics_path = out_dir / "metrics.csv";

    std::optional<Checkpoint> resumed;
    if (cfg.resume && fs::exists(ckpt_path)) resumed = load_checkpoint(ckpt_path);

    const NetworkSpec spec = resumed ? resumed->spec : resolve_spec(cfg, data.train.front().n);
    if (resumed) (void)as_input(spec, data.train.front());
    TrainConfig tcfg = resumed ? resumed->config : cfg.train;
    tcfg.validate();

    const Trainer trainer(spec, data.train, data.test, tcfg, cfg.resolved_threads());
    TrainerState state = resumed ? resumed->state() : trainer.initial_state();

    if (!cfg.resume) prepare_output_dir(out_dir, cfg.force);
    fs::create_directories(out_dir);
    RunConfig snapshot = cfg;
    snapshot.train = tcfg;
    write_json(out_dir / "run_config.json", snapshot.to_json());
    save_spec(out_dir / "spec.json", spec);

    MetricsWriter metrics = resumed ? MetricsWriter::resume(metrics_path, state.generation)
                                    : MetricsWriter::create(metrics_path);
    if (!resumed) save_checkpoint(ckpt_path, make_checkpoint(trainer, state));
    if (resumed) log << "resuming at generation " << state.generation << '\n';

    const std::size_t every = cfg.checkpoint_every; // 0: only at start and stop
    std::optional<GenerationStats> last;
    trainer.run(state, [&](const TrainerState& s, const GenerationStats& g) {
        metrics.append(g);
        last = g;
        if (every != 0 && s.generation % every == 0) save_checkpoint(ckpt_path, make_checkpoint(trainer, s));
        log << "generation " << g.generation << "  best " << format_number(g.best_child) << "  mean "
            << format_number(g.mean_child) << "  worst " << format_number(g.worst_child) << "  parent "
            << format_number(g.parent_train_acc);
        if (g.test_acc) log << "  test " << format_number(*g.test_acc);
        log << '\n';
    });
    save_checkpoint(ckpt_path, make_checkpoint(trainer, state));
    save_genome(out_dir / "final_genome.dnew", state.parent);

    if (cfg.emit_plots) {
        const auto rows = read_metrics(metrics_path);
        write_training_plot(rows, out_dir / "train_accuracy.svg");
        write_test_plot(rows, out_dir / "test_accuracy.svg");
    }
    log << "stopped after generation " << state.generation << '\n';
    return TrainSummary{std::move(state.parent), state.generation, last};
}

EvalReport evaluate_report(const NetworkSpec& spec, const FlatGenome& genome, std::span<const AdjacencyMatrix> data) {
    if (data.empty()) throw UsageError("nothing to evaluate");
    EvalReport r;
    for (const auto& m : data) {
        const Label predicted = predict(forward(spec, genome, m));
        ++r.confusion[label_index(m.label)][label_index(predicted)];
        ++r.total;
    }
    const std::size_t correct = r.confusion[0][0] + r.confusion[1][1];
    r.overall = static_cast<double>(correct) / static_cast<double>(r.total);
    for (int c = 0; c < 2; ++c) {
        const std::size_t n = r.confusion[c][0] + r.confusion[c][1];
        r.per_class[c] = n == 0 ? 0.0 : static_cast<double>(r.confusion[c][c]) / static_cast<double>(n);
    }
    return r;
}

void print_report(const EvalReport& r, std::ostream& out) {
    out << "matrices: " << r.total << '\n'
        << "overall accuracy: " << format_number(r.overall) << '\n'
        << "LGG accuracy: " << format_number(r.per_class[0]) << '\n'
        << "HGG accuracy: " << format_number(r.per_class[1]) << '\n'
        << "confusion (rows true, columns predicted)\n"
        << "       LGG    HGG\n";
    for (int t = 0; t < 2; ++t) {
        char line[64];
        std::snprintf(line, sizeof line, "%s %6zu %6zu\n", t == 0 ? "LGG" : "HGG", r.confusion[t][0], r.confusion[t][1]);
        out << line;
    }
}

EvalReport cmd_eval(const fs::path& checkpoint, const fs::path& dataset, const std::string& split, std::ostream& out) {
    if (split != "train" && split != "test" && split != "all") {
        throw ValidationError("split must be train, test or all");
    }
    const auto ckpt = load_checkpoint(checkpoint);
    const auto data = load_dataset(dataset);
    std::vector<AdjacencyMatrix> chosen;
    if (split != "test") chosen.insert(chosen.end(), data.train.begin(), data.train.end());
    if (split != "train") chosen.insert(chosen.end(), data.test.begin(), data.test.end());
    for (const auto& m : chosen) (void)as_input(ckpt.spec, m);
    const auto report = evaluate_report(ckpt.spec, ckpt.parent, chosen);
    out << "split: " << split << " (generation " << ckpt.generation << ")\n";
    print_report(report, out);
    return report;
}

SaliencyMap cmd_saliency(const fs::path& checkpoint, const fs::path& matrix_file, const OcclusionConfig& cfg,
                         const fs::path& out_dir, std::size_t threads, std::ostream& log) {
    const auto ckpt = load_checkpoint(checkpoint);
    const std::string stem = matrix_file.stem().string();
    const auto input = load_adjacency(matrix_file, stem, Label::LGG);
    cfg.validate(input.n);
    const auto map = occlusion_saliency(ckpt.spec, ckpt.parent.view(), input, cfg, threads);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    export_saliency(map, out_dir / (stem + ".saliency.csv"), SaliencyFormat::Csv);
    export_saliency(map, out_dir / (stem + ".saliency.pgm"), SaliencyFormat::Pgm);
    export_saliency(map, out_dir / (stem + ".saliency.svg"), SaliencyFormat::Svg);
    write_json(out_dir / "saliency_config.json",
               {{"checkpoint", checkpoint.string()},
                {"matrix", matrix_file.string()},
                {"patch_size", cfg.patch_size},
                {"stride", cfg.stride},
                {"baseline", cfg.baseline},
                {"target", cfg.target ? nlohmann::json(label_index(*cfg.target)) : nlohmann::json("predicted")},
                {"target_class", label_index(map.target_class)}});
    log << "saliency for " << stem << " (target " << label_name(map.target_class) << ") written to " << out_dir.string()
        << '\n';
    return map;
}

void cmd_inspect(const fs::path& path, const fs::path& spec_path, std::ostream& out) {
    if (fs::is_directory(path) || path.filename() == "manifest.json") {
        const auto data = load_dataset(path);
        for (const auto* part : {&data.train, &data.test}) {
            std::array<std::size_t, 2> counts{};
            std::array<double, 2> mean{};
            for (const auto& m : *part) {
                ++counts[label_index(m.label)];
                mean[label_index(m.label)] += mean_intensity(m);
            }
            out << (part == &data.train ? "train" : "test") << ": " << counts[0] << " LGG, " << counts[1] << " HGG";
            for (int c = 0; c < 2; ++c) {
                if (counts[c]) out << "; mean intensity " << label_name(static_cast<Label>(c)) << ' '
                                   << format_number(mean[c] / static_cast<double>(counts[c]));
            }
            out << '\n';
        }
        if (!data.train.empty()) out << "matrix size: " << data.train.front().n << '\n';
        return;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8] = {};
    in.read(magic, 8);
    const std::string_view head(magic, static_cast<std::size_t>(in.gcount()));
    if (head == std::string_view(kCheckpointMagic, 8)) {
        const auto c = load_checkpoint(path);
        out << "checkpoint at generation " << c.generation << ", master seed " << c.master_seed
            << ", perfect streak " << c.perfect_streak << '\n'
            << "config " << c.config.to_json().dump() << '\n'
            << describe(c.spec);
    } else if (head == std::string_view(kGenomeMagic, 8)) {
        if (spec_path.empty()) throw UsageError("inspecting a genome file needs --spec");
        const auto spec = load_spec(spec_path);
        const auto g = load_genome(path, spec);
        double sum = 0.0, sq = 0.0;
        for (const float v : g.values) {
            sum += v;
            sq += static_cast<double>(v) * v;
        }
        const double n = static_cast<double>(g.param_count());
        out << "genome with " << g.param_count() << " parameters, mean " << format_number(sum / n) << ", rms "
            << format_number(std::sqrt(sq / n)) << '\n';
    } else if (path.extension() == ".json") {
        out << describe(load_spec(path));
    } else if (path.extension() == ".csv") {
        const auto rows = read_metrics(path);
        out << rows.size() << " generations\n";
        if (!rows.empty()) out << "last: " << format_metrics_row(rows.back()) << '\n';
    } else {
        throw UsageError("do not know how to inspect " + path.string());
    }
}

} // namespace dnefc
