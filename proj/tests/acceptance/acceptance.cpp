// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. Optional arguments select criteria
// by number, e.g. `dnefc_acceptance 3 4 9`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>

#include "dnefc/checkpoint.hpp"
#include "dnefc/connectome.hpp"
#include "dnefc/dataset.hpp"
#include "dnefc/harness.hpp"
#include "dnefc/metrics.hpp"
#include "dnefc/parallel.hpp"
#include "dnefc/saliency.hpp"
#include "dnefc/trainer.hpp"
#include "oracles.hpp"

extern char** environ;

using namespace dnefc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fixed(double v, int digits = 1) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// CI-scale data: 32x32 matrices, 12 + 12 training and 12 + 12 test subjects.
SynthConfig ci_synth() {
    SynthConfig c;
    c.n_rois = 32;
    c.n_per_class_train = 12;
    c.n_per_class_test = 12;
    return c;
}

std::size_t first_perfect(const std::vector<GenerationStats>& stats) {
    for (const auto& s : stats)
        if (s.parent_train_acc == 1.0) return s.generation;
    return 0;
}

// 1 -------------------------------------------------------------------------
Outcome full_scale() {
    const Dataset data = generate_synthetic_dataset(SynthConfig{});
    const auto spec = default_spec();
    const std::size_t threads = default_thread_count();
    int good = 0;
    double slowest = 0;
    std::ostringstream detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        TrainConfig cfg;
        cfg.max_generations = 500;
        cfg.master_seed = seed;
        const Trainer trainer(spec, data.train, data.test, cfg, threads);
        auto state = trainer.initial_state();
        const auto t0 = Clock::now();
        const auto stats = trainer.run(state, [&](const TrainerState&, const GenerationStats& g) {
            if (g.generation % 50 == 0)
                std::cerr << "  [1] seed " << seed << " generation " << g.generation << " parent "
                          << fixed(g.parent_train_acc, 3) << " test " << fixed(g.test_acc.value_or(0), 3) << '\n';
        });
        const double secs = seconds_since(t0);
        slowest = std::max(slowest, secs);
        const std::size_t converged = first_perfect(stats);
        const auto correct = static_cast<long>(std::lround(stats.back().test_acc.value_or(0) * 30));
        const bool ok = converged != 0 && correct >= 28 && secs <= 3600;
        good += ok;
        detail << (seed > 1 ? "; " : "") << "seed " << seed << ": "
               << (converged ? "train 1.0 at gen " + std::to_string(converged) : std::string("not converged"))
               << ", test " << correct << "/30, " << fixed(secs / 60) << " min";
    }
    detail << "; " << good << "/5 runs ok, slowest " << fixed(slowest / 60) << " min on " << threads << " thread(s)";
    return {good >= 4, detail.str()};
}

// 2 -------------------------------------------------------------------------
Outcome ci_convergence() {
    const Dataset data = generate_synthetic_dataset(ci_synth());
    TrainConfig cfg;
    cfg.max_generations = 150;
    cfg.master_seed = 1;
    const auto t0 = Clock::now();
    const auto result = train(compact_spec(32), data.train, data.test, cfg, default_thread_count());
    const double secs = seconds_since(t0);
    const std::size_t converged = first_perfect(result.stats);
    return {converged != 0 && converged <= 150 && secs < 300,
            (converged ? "train 1.0 at gen " + std::to_string(converged) : std::string("not converged in 150")) +
                ", " + fixed(secs) + " s"};
}

// 3 -------------------------------------------------------------------------
Outcome architecture() {
    const auto spec = default_spec();
    const std::vector<Shape> chain{{53, 53, 32}, {27, 27, 32}, {14, 14, 32}, {7, 7, 32}, {1568}};
    bool ok = std::equal(chain.begin(), chain.end(), spec.output_shapes().begin());
    const std::size_t by_hand = 320 + 3 * 9248 + 803328 + 131328 + 32896 + 258;
    const std::size_t summed = oracle::param_sum(spec.layers());
    ok = ok && spec.param_count() == 995874 && by_hand == 995874 && summed == 995874 &&
         glorot_init(spec, 0).param_count() == 995874;
    return {ok, "shapes 105>53>27>14>7, flatten " + std::to_string(spec.output_shapes()[4][0]) + ", params " +
                    std::to_string(spec.param_count()) + " (oracle " + std::to_string(summed) + ")"};
}

// 4 -------------------------------------------------------------------------
Outcome conv_oracle() {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::size_t> size(3, 16), chan(1, 8), ks(1, 3), st(1, 2), pd(0, 1);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t h = size(rng), w = size(rng), cin = chan(rng), cout = chan(rng);
        const std::size_t k = ks(rng), stride = st(rng), pad = pd(rng);
        const auto in = oracle::random_floats(rng, h * w * cin);
        const auto kernel = oracle::random_floats(rng, k * k * cin * cout);
        const auto bias = oracle::random_floats(rng, cout);
        const Tensor out = conv2d_forward(Tensor({h, w, cin}, in), {kernel, bias, k, cin, cout}, stride, pad);
        std::size_t oh = 0, ow = 0;
        const auto ref = oracle::conv2d(in, h, w, cin, kernel, bias, k, cout, stride, pad, oh, ow);
        if (out.shape() != Shape{oh, ow, cout}) return {false, "shape mismatch in case " + std::to_string(trial)};
        for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(ref[i] - out[i]));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "100 cases, max abs error %.3g", worst);
    return {worst <= 1e-5, buf};
}

// 5 -------------------------------------------------------------------------
Outcome determinism() {
    oracle::TempDir dir("acc5");
    RunConfig base;
    base.synth = ci_synth();
    base.output_dir = (dir / "data").string();
    std::ostringstream log;
    cmd_synth(base, log);
    base.dataset_dir = base.output_dir;
    base.arch = "compact";
    base.train.max_generations = 150;
    base.train.master_seed = 11;
    base.emit_plots = false;
    std::string metrics[2];
    const std::size_t threads[2] = {1, 4};
    for (int i = 0; i < 2; ++i) {
        RunConfig c = base;
        c.threads = threads[i];
        c.output_dir = (dir / ("t" + std::to_string(threads[i]))).string();
        cmd_train(c, log);
        metrics[i] = oracle::read_file(fs::path(c.output_dir) / "metrics.csv");
    }
    const auto rows = std::count(metrics[0].begin(), metrics[0].end(), '\n') - 1;
    return {metrics[0] == metrics[1] && rows > 0,
            std::to_string(rows) + " generations, metrics.csv " +
                (metrics[0] == metrics[1] ? "byte-identical" : "differs") + " for 1 and 4 threads"};
}

// 6 -------------------------------------------------------------------------
Outcome es_mechanics() {
    const auto spec = default_spec();
    const auto parent = glorot_init(spec, 6);
    bool symmetric = true;
    for (std::size_t i = 0; i < TrainConfig{}.pairs() && symmetric; ++i) {
        std::vector<std::vector<float>> dir(1, std::vector<float>(spec.param_count()));
        fill_direction(6, 1, i, dir[0]);
        const auto kids = make_children(parent, dir, 0.1);
        for (std::size_t k = 0; k < parent.param_count(); ++k) {
            if (double(kids[0].genome.values[k]) + double(kids[1].genome.values[k]) != 2.0 * parent.values[k]) {
                symmetric = false;
                break;
            }
        }
    }

    const Dataset data = generate_synthetic_dataset(ci_synth());
    TrainConfig frozen;
    frozen.sigma = 0.0;
    frozen.max_generations = 10;
    frozen.early_stop_patience = 0;
    const Trainer trainer(compact_spec(32), data.train, data.test, frozen, default_thread_count());
    auto state = trainer.initial_state();
    const auto start = state.parent;
    const auto stats = trainer.run(state);
    const bool fixed_point = stats.size() == 10 && state.parent == start;

    bool ceil_rule = true;
    for (std::size_t n = 2; n <= 41; ++n)
        for (const auto& [p, q] : std::vector<std::pair<std::size_t, std::size_t>>{
                 {1, 2}, {1, 10}, {3, 10}, {1, 4}, {3, 4}, {1, 3}, {2, 3}, {9, 10}, {1, 1}})
            ceil_rule = ceil_rule && elite_count(n, double(p) / double(q)) == std::max<std::size_t>(1, (p * n + q - 1) / q);

    return {symmetric && fixed_point && ceil_rule,
            std::string("antithetic ") + (symmetric ? "exact" : "BROKEN") + " over 20 pairs x 995874 params; sigma=0 " +
                (fixed_point ? "fixed" : "MOVED") + " over 10 generations; elite ceil rule " +
                (ceil_rule ? "holds" : "BROKEN") + " for N=2..41"};
}

// 7 -------------------------------------------------------------------------
Outcome preprocessing() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    double lo = 1, hi = 0;
    bool shape_ok = true;
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 20 + 3 * t;
        std::vector<double> m(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) m[i * n + j] = m[j * n + i] = z(rng);
        const auto out = scale_and_threshold(m);
        std::size_t ones = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double v = out[i * n + j];
                shape_ok = shape_ok && v >= 0.0 && v <= 1.0 && v == out[j * n + i];
                ones += v == 1.0;
            }
        shape_ok = shape_ok && *std::max_element(out.begin(), out.end()) == 1.0;
        const double frac = double(ones) / double(n * n);
        lo = std::min(lo, frac);
        hi = std::max(hi, frac);
    }
    double worst = 0;
    for (int i = -998; i <= 998; ++i) {
        const double r = i / 999.0 * 0.999;
        worst = std::max(worst, std::abs(fisher_z(r) - std::atanh(r)));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "50 inputs: max 1, symmetric, in [0,1]: %s; ones fraction in [%.3f, %.3f]; "
                                   "fisher_z vs atanh max error %.2g",
                  shape_ok ? "yes" : "no", lo, hi, worst);
    return {shape_ok && lo >= 0.45 && hi <= 0.55 && worst <= 1e-9, buf};
}

// 8 -------------------------------------------------------------------------
Outcome saliency() {
    const std::size_t n = 21, row = 10;
    const auto spec = NetworkSpec::create({n, n, 1}, {Flatten{}, Dense{n * n, 2, Activation::None}, Softmax{}});
    std::vector<float> w(spec.param_count(), 0.0f);
    for (std::size_t j = 0; j < n; ++j) w[(row * n + j) * 2 + 1] = 0.05f;
    const FlatGenome planted(spec, w);
    std::mt19937_64 rng(8);
    const AdjacencyMatrix input{"probe", Label::HGG, n, oracle::random_floats(rng, n * n, 0.5f, 1.0f)};

    OcclusionConfig cfg;
    cfg.target = Label::HGG;
    const auto map = occlusion_saliency(spec, planted.view(), input, cfg);
    std::vector<double> sums(n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) sums[r] += map.at(r, c);
    const auto top = static_cast<std::size_t>(std::max_element(sums.begin(), sums.end()) - sums.begin());

    const FlatGenome blind(spec, std::vector<float>(spec.param_count(), 0.0f));
    const auto zero = occlusion_saliency(spec, blind.view(), input, cfg);
    const bool all_zero = std::all_of(zero.values.begin(), zero.values.end(), [](float v) { return v == 0.0f; });

    const auto again = occlusion_saliency(spec, planted.view(), input, cfg, 3);
    const bool same = again.values == map.values;
    return {top == row && all_zero && same, "argmax row-sum " + std::to_string(top) + " (planted " +
                                                std::to_string(row) + "); constant network map " +
                                                (all_zero ? "all zero" : "NONZERO") + "; repeat " +
                                                (same ? "identical" : "DIFFERS")};
}

// 9 -------------------------------------------------------------------------
pid_t spawn(const std::vector<std::string>& args) {
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
    pid_t pid = 0;
    const int rc = posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) throw std::runtime_error("cannot start " + args[0]);
    return pid;
}

int wait_exit(pid_t pid) {
    int status = 0;
    waitpid(pid, &status, 0);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t metrics_rows(const fs::path& p) {
    const auto text = oracle::read_file(p);
    const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    return lines == 0 ? 0 : lines - 1;
}

// Returns the number of complete rows present when the process was killed.
std::size_t run_and_kill(const std::vector<std::string>& args, const fs::path& metrics, std::size_t after_rows) {
    const pid_t pid = spawn(args);
    std::size_t rows = 0;
    while (true) {
        rows = metrics_rows(metrics);
        if (rows >= after_rows) break;
        int status = 0;
        if (waitpid(pid, &status, WNOHANG) == pid) throw std::runtime_error("run ended before the kill point");
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    kill(pid, SIGKILL);
    waitpid(pid, nullptr, 0);
    return rows;
}

Outcome crash_safety() {
    oracle::TempDir dir("acc9");
    const std::string cli = DNEFC_CLI_PATH;
    const auto data = (dir / "data").string();
    if (wait_exit(spawn({cli, "synth", "-o", data, "--n-rois", "32", "--n-train", "12", "--n-test", "12"})) != 0)
        return {false, "synth failed"};
    const auto train_args = [&](const fs::path& out) {
        return std::vector<std::string>{cli,  "train",       "-d",    data, "-o", out.string(), "--arch", "compact",
                                        "--seed", "9",      "-j",    "1",  "--checkpoint-every", "5", "--no-plots"};
    };
    const auto ref = dir / "reference";
    const auto victim = dir / "victim";
    if (wait_exit(spawn(train_args(ref))) != 0) return {false, "uninterrupted run failed"};

    auto resume_args = train_args(victim);
    resume_args.push_back("--resume");
    std::vector<std::size_t> kills;
    kills.push_back(run_and_kill(train_args(victim), victim / "metrics.csv", 13));
    const std::size_t ckpt_gen = load_checkpoint(victim / "checkpoint.dnec").generation;
    kills.push_back(run_and_kill(resume_args, victim / "metrics.csv", 27));
    if (wait_exit(spawn(resume_args)) != 0) return {false, "resumed run failed"};

    const bool same_metrics = oracle::read_file(ref / "metrics.csv") == oracle::read_file(victim / "metrics.csv");
    const bool same_genome =
        oracle::read_file(ref / "final_genome.dnew") == oracle::read_file(victim / "final_genome.dnew");
    return {same_metrics && same_genome,
            "killed after " + std::to_string(kills[0]) + " rows (checkpoint at gen " + std::to_string(ckpt_gen) +
                ") and again after " + std::to_string(kills[1]) + " rows; resumed metrics.csv " +
                (same_metrics ? "identical" : "DIFFERS") + ", final genome " + (same_genome ? "identical" : "DIFFERS") +
                " vs uninterrupted run (" + std::to_string(metrics_rows(ref / "metrics.csv")) + " generations)"};
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"synthetic full-scale reproduction", full_scale},
        {"CI-scale convergence", ci_convergence},
        {"architecture suite", architecture},
        {"convolution oracle", conv_oracle},
        {"thread-count determinism", determinism},
        {"evolution-strategy mechanics", es_mechanics},
        {"preprocessing", preprocessing},
        {"saliency", saliency},
        {"crash safety", crash_safety},
    };
    int failed = 0, ran = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && !only.count(id)) continue;
        ++ran;
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << criteria[i].first << ": "
                  << o.detail << "  [" << fixed(seconds_since(t0)) << " s]" << std::endl;
    }
    std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
