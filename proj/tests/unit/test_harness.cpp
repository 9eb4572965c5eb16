#include <doctest.h>

#include <sstream>

#include "dnefc/errors.hpp"
#include "dnefc//checkpoint.hpp"
#include "dnefc/harness.hpp"
#include "dnefc/metrics.hpp"
#include "oracles.hpp"

using namespace dnefc;
namespace fs = std::filesystem;

namespace {

RunConfig small_run(const fs::path& data, const fs::path& out, std::size_t gens) {
    RunConfig c;
    c.synth = SynthConfig{16, 6, 4, 4, 0.3, 0.05, 2};
    c.arch = "compact";
    c.dataset_dir = data.string();
    c.output_dir = out.string();
    c.train.max_generations = gens;
    c.train.master_seed = 5;
    c.train.early_stop_patience = 0;
    c.threads = 1;
    c.checkpoint_every = 5;
    return c;
}

void make_dataset(const fs::path& dir) {
    RunConfig c = small_run(dir, dir, 0);
    std::ostringstream log;
    cmd_synth(c, log);
}

} // namespace

TEST_CASE("metrics rows round trip") {
    GenerationStats s{7, 0.75, 0.5125, 0.25, 0.7, 0.6};
    const auto row = format_metrics_row(s);
    CHECK(row == "7,0.75,0.5125,0.25,0.7,0.6");
    CHECK(parse_metrics_row(row) == s);
    s.test_acc.reset();
    CHECK(format_metrics_row(s) == "7,0.75,0.5125,0.25,0.7,");
    CHECK(parse_metrics_row(format_metrics_row(s)) == s);
    const double third = 1.0 / 3.0;
    CHECK(std::stod(format_number(third)) == third);
    CHECK_THROWS_AS(parse_metrics_row("1,2,3"), FormatError);
    CHECK_THROWS_AS(parse_metrics_row("x,1,1,1,1,1"), FormatError);
}

TEST_CASE("metrics writer resume drops later and torn rows") {
    oracle::TempDir dir("metrics");
    const auto path = dir / "metrics.csv";
    {
        auto w = MetricsWriter::create(path);
        for (std::size_t g = 1; g <= 6; ++g) w.append({g, 1, 0.5, 0, 0.5, std::nullopt});
    }
    std::ofstream(path, std::ios::app) << "7,1,0.5";
    {
        auto w = MetricsWriter::resume(path, 4);
        w.append({5, 0.9, 0.5, 0.1, 0.6, 0.5});
    }
    const auto rows = read_metrics(path);
    REQUIRE(rows.size() == 5);
    CHECK(rows.back().best_child == 0.9);
    CHECK(oracle::read_file(path).rfind(std::string(kMetricsHeader) + "\n", 0) == 0);

    write_training_plot(rows, dir / "t.svg");
    write_test_plot(rows, dir / "s.svg");
    const auto svg = oracle::read_file(dir / "t.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("#d62728") != std::string::npos);
}

TEST_CASE("run config json") {
    RunConfig c;
    c.arch = "compact";
    c.train.sigma = 0.2;
    c.synth.seed = 4;
    c.threads = 3;
    c.checkpoint_every = 7;
    const auto back = RunConfig::from_json(c.to_json());
    CHECK(back.arch == "compact");
    CHECK(back.train == c.train);
    CHECK(back.synth == c.synth);
    CHECK(back.threads == 3);
    CHECK(back.checkpoint_every == 7);
    const auto partial = RunConfig::from_json({{"train", {{"sigma", 0.3}}}});
    CHECK(partial.train.sigma == 0.3);
    CHECK(partial.train.episodes_per_generation == 40);
    CHECK_THROWS_AS(RunConfig::from_json({{"threads", "many"}}), ValidationError);
}

TEST_CASE("synth command") {
    oracle::TempDir a("synth_a"), b("synth_b");
    RunConfig c;
    c.output_dir = a.path().string();
    std::ostringstream log;
    cmd_synth(c, log);
    std::size_t csv = 0;
    for (const auto& e : fs::directory_iterator(a.path())) csv += e.path().extension() == ".csv";
    CHECK(csv == 60);
    CHECK(fs::exists(a / "manifest.json"));
    CHECK(fs::exists(a / "run_config.json"));
    CHECK_THROWS_AS(cmd_synth(c, log), ValidationError);

    c.force = true;
    c.output_dir = b.path().string();
    cmd_synth(c, log);
    for (const auto& e : fs::directory_iterator(a.path())) {
        if (e.path().filename() == "run_config.json") continue;
        REQUIRE(oracle::read_file(e.path()) == oracle::read_file(b.path() / e.path().filename()));
    }
    c.synth.separability = 2.0;
    CHECK_THROWS_AS(cmd_synth(c, log), ValidationError);
}

TEST_CASE("train, eval, saliency and inspect") {
    oracle::TempDir data("h_data"), run("h_run"), sal("h_sal");
    make_dataset(data.path());
    auto cfg = small_run(data.path(), run.path(), 400);
    cfg.train.early_stop_patience = 5;
    std::ostringstream log;
    const auto summary = cmd_train(cfg, log);
    for (const char* f : {"run_config.json", "spec.json", "metrics.csv", "checkpoint.dnec", "final_genome.dnew",
                          "train_accuracy.svg", "test_accuracy.svg"})
        CHECK(fs::exists(run / f));
    REQUIRE(summary.last.has_value());
    CHECK(summary.last->parent_train_acc == 1.0);

    const auto rows = read_metrics(run / "metrics.csv");
    CHECK(rows.size() == summary.generations);
    for (const auto& r : rows) {
        CHECK(r.worst_child <= r.mean_child);
        CHECK(r.mean_child <= r.best_child);
    }

    std::ostringstream out;
    const auto train_report = cmd_eval(run / "checkpoint.dnec", data.path(), "train", out);
    CHECK(train_report.overall == 1.0);
    const auto all = cmd_eval(run / "checkpoint.dnec", data.path(), "all", out);
    CHECK(all.total == 20);
    CHECK(all.confusion[0][0] + all.confusion[0][1] + all.confusion[1][0] + all.confusion[1][1] == 20);
    CHECK_THROWS_AS(cmd_eval(run / "checkpoint.dnec", data.path(), "dev", out), ValidationError);

    const auto matrix = data / "test_hgg_000.csv";
    OcclusionConfig occ;
    occ.patch_size = 5;
    const auto m1 = cmd_saliency(run / "checkpoint.dnec", matrix, occ, sal.path(), 1, out);
    for (const char* f : {"test_hgg_000.saliency.csv", "test_hgg_000.saliency.pgm", "test_hgg_000.saliency.svg",
                          "saliency_config.json"})
        CHECK(fs::exists(sal / f));
    const auto first_pgm = oracle::read_file(sal / "test_hgg_000.saliency.pgm");
    const auto m2 = cmd_saliency(run / "checkpoint.dnec", matrix, occ, sal.path(), 2, out);
    CHECK(m1.values == m2.values);
    CHECK(oracle::read_file(sal / "test_hgg_000.saliency.pgm") == first_pgm);
    const auto ckpt = load_checkpoint(run / "checkpoint.dnec");
    CHECK(m1.target_class ==
          predict(forward(ckpt.spec, ckpt.parent, load_adjacency(matrix, "x", Label::LGG))));

    for (const fs::path& p : {data.path(), run / "checkpoint.dnec", run / "spec.json", run / "metrics.csv"}) {
        std::ostringstream s;
        cmd_inspect(p, {}, s);
        CHECK_FALSE(s.str().empty());
    }
    std::ostringstream g;
    cmd_inspect(run / "final_genome.dnew", run / "spec.json", g);
    CHECK(g.str().find("parameters") != std::string::npos);
    CHECK_THROWS_AS(cmd_inspect(run / "final_genome.dnew", {}, g), UsageError);
}

TEST_CASE("all-wrong predictor scores zero") {
    const auto spec = NetworkSpec::create({2, 2, 1}, {Flatten{}, Dense{4, 2, Activation::None}, Softmax{}});
    const FlatGenome inverted(spec, {0, 1, 0, 0, 0, 0, 1, 0, 0, 0});
    std::vector<AdjacencyMatrix> data;
    for (int i = 0; i < 5; ++i) {
        data.push_back({"l" + std::to_string(i), Label::LGG, 2, {1, 0, 0, 0}});
        data.push_back({"h" + std::to_string(i), Label::HGG, 2, {0, 0, 0, 1}});
    }
    const auto r = evaluate_report(spec, inverted, data);
    CHECK(r.overall == 0.0);
    CHECK(r.confusion[0][1] == 5);
    CHECK(r.confusion[1][0] == 5);
    std::ostringstream out;
    print_report(r, out);
    CHECK(out.str().find("overall accuracy: 0") != std::string::npos);
}

TEST_CASE("resume after an interruption continues the same trajectory") {
    oracle::TempDir data("r_data"), full("r_full"), cut("r_cut");
    make_dataset(data.path());
    std::ostringstream log;
    const auto cfg_full = small_run(data.path(), full.path(), 12);
    cmd_train(cfg_full, log);
    const auto reference = oracle::read_file(full / "metrics.csv");

    // Reproduce what a crash at generation 8 leaves behind: the generation 5
    // checkpoint, rows 1..8 and a torn row.
    auto cfg_cut = small_run(data.path(), cut.path(), 12);
    cmd_train(cfg_cut, log);
    const auto ckpt = load_checkpoint(cut / "checkpoint.dnec");
    const Trainer trainer(ckpt.spec, load_dataset(data.path()).train, load_dataset(data.path()).test, ckpt.config, 1);
    auto state = trainer.initial_state();
    for (int g = 0; g < 5; ++g) trainer.run_generation(state);
    save_checkpoint(cut / "checkpoint.dnec", make_checkpoint(trainer, state));
    std::string partial;
    {
        std::istringstream in(reference);
        std::string line;
        for (int i = 0; i <= 8 && std::getline(in, line); ++i) partial += line + '\n';
    }
    std::ofstream(cut / "metrics.csv", std::ios::trunc) << partial << "9,0.5,0.";

    cfg_cut.resume = true;
    const auto summary = cmd_train(cfg_cut, log);
    CHECK(summary.generations == 12);
    CHECK(oracle::read_file(cut / "metrics.csv") == reference);
    CHECK(oracle::read_file(cut / "final_genome.dnew") == oracle::read_file(full / "final_genome.dnew"));
}
